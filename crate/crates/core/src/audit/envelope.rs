use serde::{Deserialize, Serialize};

use super::{min_defect, FieldEvaluator, FnEvaluator, Mode, SamplerConfig};
use crate::domain::{DiscretizedDomain, DomainSpec, Point};
use crate::error::{Error, Result};
use crate::operators::{Field, Time};

/// `n(n+3)/(4(n+1))`.
pub fn hyers_ulam_constant(n: usize) -> f64 {
    let n = n as f64;
    n * (n + 3.0) / (4.0 * (n + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullCertificate {
    pub dimension: usize,
    pub k_n: f64,
    /// Measured concavity defect of the input.
    pub delta: f64,
    pub distance: f64,
    pub satisfied: bool,
}

impl HullCertificate {
    fn new(dimension: usize, delta: f64, distance: f64) -> Self {
        let k_n = hyers_ulam_constant(dimension);
        HullCertificate { dimension, k_n, delta, distance, satisfied: distance <= k_n * delta + 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope1d {
    /// Vertices of the least concave majorant.
    pub hull: Vec<(f64, f64)>,
    pub g: Vec<f64>,
    pub distance: f64,
    pub certificate: HullCertificate,
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn upper_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

fn eval_hull(hull: &[(f64, f64)], x: f64) -> f64 {
    let k = hull.partition_point(|v| v.0 < x).clamp(1, hull.len() - 1);
    let (a, b) = (hull[k - 1], hull[k]);
    if b.0 == a.0 {
        return a.1.max(b.1);
    }
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

/// Largest chord-over-value gap over node triples `x_i < x_k < x_j`.
fn section_defect(xs: &[f64], fs: &[f64]) -> f64 {
    let n = xs.len();
    let mut worst = 0.0f64;
    for k in 1..n.saturating_sub(1) {
        for i in 0..k {
            for j in k + 1..n {
                let l = (xs[k] - xs[i]) / (xs[j] - xs[i]);
                worst = worst.max(l * fs[j] + (1.0 - l) * fs[i] - fs[k]);
            }
        }
    }
    worst
}

/// Concave approximation of a sampled 1-D section.
pub fn concave_approximation_1d(xs: &[f64], fs: &[f64]) -> Result<Envelope1d> {
    if xs.len() != fs.len() || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidDomain("section abscissae must be strictly increasing".into()));
    }
    if xs.len() < 2 {
        return Err(Error::HullDegenerate(xs.len()));
    }
    let pts: Vec<(f64, f64)> = xs.iter().copied().zip(fs.iter().copied()).collect();
    let hull = upper_hull(&pts);
    let gap: Vec<f64> = pts.iter().map(|&(x, f)| eval_hull(&hull, x) - f).collect();
    let d = gap.iter().copied().fold(0.0f64, f64::max);
    let g = pts.iter().map(|&(x, _)| eval_hull(&hull, x) - d / 2.0).collect();
    let distance = d / 2.0;
    let certificate = HullCertificate::new(1, section_defect(xs, fs), distance);
    Ok(Envelope1d { hull, g, distance, certificate })
}

/// Concave approximation of a planar field: `g = ĝ − d/2` with `ĝ` the
/// least concave majorant of the node values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// Upper-hull planes `z = a x + b y + c`; `ĝ` is their minimum.
    pub planes: Vec<[f64; 3]>,
    pub shift: f64,
    pub g: Field,
    pub distance: f64,
    pub certificate: HullCertificate,
}

fn plane_min(planes: &[[f64; 3]], x: Point) -> f64 {
    planes.iter().map(|p| p[0] * x[0] + p[1] * x[1] + p[2]).fold(f64::INFINITY, f64::min)
}

impl Envelope {
    pub fn eval(&self, x: Point) -> f64 {
        plane_min(&self.planes, x) - self.shift
    }

    /// Analytic evaluator of `g` on the domain, sampled at spacing `h`.
    pub fn evaluator(&self, spec: DomainSpec, h: f64) -> FnEvaluator {
        let planes = self.planes.clone();
        let shift = self.shift;
        FnEvaluator::on_domain(spec, h, move |x, _| plane_min(&planes, x) - shift)
    }
}

type P3 = [f64; 3];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: P3) -> f64 {
    dot3(a, a).sqrt()
}

struct Face {
    v: [usize; 3],
    n: P3,
    off: f64,
}

fn make_face(pts: &[P3], v: [usize; 3]) -> Face {
    let c = cross3(sub(pts[v[1]], pts[v[0]]), sub(pts[v[2]], pts[v[0]]));
    let l = norm3(c);
    let n = if l > 0.0 { [c[0] / l, c[1] / l, c[2] / l] } else { [0.0; 3] };
    Face { v, n, off: dot3(n, pts[v[0]]) }
}

/// Upper-hull planes of a lifted point cloud by incremental insertion in
/// lexicographic order.
fn upper_planes(pts: &[P3]) -> Result<Vec<[f64; 3]>> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (pts[a], pts[b]);
        p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])).then(p[2].total_cmp(&q[2])).then(a.cmp(&b))
    });
    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()).max(p[2].abs())).max(1e-300);
    let eps = 1e-12 * scale;

    let i0 = order[0];
    let i1 = *order.iter().max_by(|&&a, &&b| norm3(sub(pts[a], pts[i0])).total_cmp(&norm3(sub(pts[b], pts[i0])))).unwrap();
    let line = sub(pts[i1], pts[i0]);
    let ld = norm3(line);
    if ld <= eps {
        return Err(Error::HullDegenerate(1));
    }
    let off_line = |a: usize| norm3(cross3(line, sub(pts[a], pts[i0]))) / ld;
    let i2 = *order.iter().max_by(|&&a, &&b| off_line(a).total_cmp(&off_line(b))).unwrap();
    if off_line(i2) <= eps {
        return Err(Error::HullDegenerate(2));
    }
    let base = make_face(pts, [i0, i1, i2]);
    if base.n[2].abs() <= 1e-12 && pts.iter().all(|p| (dot3(base.n, *p) - base.off).abs() <= eps) {
        return Err(Error::HullDegenerate(2));
    }
    let plane_dist = |a: usize| dot3(base.n, pts[a]) - base.off;
    let i3 = *order.iter().max_by(|&&a, &&b| plane_dist(a).abs().total_cmp(&plane_dist(b).abs())).unwrap();
    if plane_dist(i3).abs() <= eps {
        let n = base.n;
        return Ok(vec![[-n[0] / n[2], -n[1] / n[2], base.off / n[2]]]);
    }

    let simplex = [i0, i1, i2, i3];
    let centroid = simplex.iter().fold([0.0; 3], |c, &i| [c[0] + pts[i][0] / 4.0, c[1] + pts[i][1] / 4.0, c[2] + pts[i][2] / 4.0]);
    let mut faces: Vec<Face> = Vec::new();
    for tri in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        let mut f = make_face(pts, tri);
        if dot3(f.n, centroid) - f.off > 0.0 {
            f = make_face(pts, [tri[0], tri[2], tri[1]]);
        }
        faces.push(f);
    }

    for &p in &order {
        if simplex.contains(&p) {
            continue;
        }
        let visible: Vec<bool> = faces.iter().map(|f| dot3(f.n, pts[p]) - f.off > eps).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges = std::collections::HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for e in 0..3 {
                edges.insert((f.v[e], f.v[(e + 1) % 3]));
            }
        }
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for e in 0..3 {
                let (a, b) = (f.v[e], f.v[(e + 1) % 3]);
                if !edges.contains(&(b, a)) {
                    horizon.push((a, b));
                }
            }
        }
        let mut next: Vec<Face> = faces.into_iter().zip(visible).filter(|(_, v)| !v).map(|(f, _)| f).collect();
        for (a, b) in horizon {
            next.push(make_face(pts, [a, b, p]));
        }
        faces = next;
    }

    Ok(faces
        .iter()
        .filter(|f| f.n[2] > 1e-9)
        .map(|f| [-f.n[0] / f.n[2], -f.n[1] / f.n[2], f.off / f.n[2]])
        .collect())
}

/// Concave approximation of a field on the interior nodes, with a
/// Hyers–Ulam certificate against the sampled defect of `f`.
pub fn concave_approximation(dom: &DiscretizedDomain, f: &Field) -> Result<Envelope> {
    let pts: Vec<P3> = (0..dom.n_unknowns()).map(|k| {
        let x = dom.node(k);
        [x[0], x[1], f.values[k]]
    }).collect();
    if pts.len() < 3 {
        return Err(Error::HullDegenerate(pts.len()));
    }
    let planes = upper_planes(&pts)?;
    let hat: Vec<f64> = pts.iter().map(|p| plane_min(&planes, [p[0], p[1]])).collect();
    let scale = f.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut d = 0.0f64;
    for (gh, v) in hat.iter().zip(&f.values) {
        if gh - v < -1e-9 * scale {
            return Err(Error::HullDegenerate(pts.len()));
        }
        d = d.max(gh - v);
    }
    let shift = d / 2.0;
    let g = Field::new(hat.iter().map(|v| v - shift).collect(), f.time);

    let field = Field::new(f.values.clone(), Time::Finite(0.0));
    let ev = FieldEvaluator::from_field(dom, &field, 1.0, 0.0)?;
    let cfg = SamplerConfig { max_points: 256, candidates: 64, ..SamplerConfig::default() };
    let delta = (-min_defect(&ev, Mode::Space, &cfg)?.min).max(0.0);
    let certificate = HullCertificate::new(2, delta, shift);
    Ok(Envelope { planes, shift, g, distance: shift, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kink_section() {
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let fs: Vec<f64> = xs.iter().map(|x| (x - 0.5).abs()).collect();
        let e = concave_approximation_1d(&xs, &fs).unwrap();
        assert!((e.distance - 0.25).abs() < 1e-15);
        assert!(e.g.iter().all(|g| (g - 0.25).abs() < 1e-15));
        assert!((e.certificate.delta - 0.5).abs() < 1e-15);
        assert!((e.certificate.k_n * e.certificate.delta - 0.25).abs() < 1e-15);
        assert!(e.certificate.satisfied);
    }

    #[test]
    fn concave_section_is_its_own_envelope() {
        let xs: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        let fs: Vec<f64> = xs.iter().map(|x| x * (1.0 - x)).collect();
        let e = concave_approximation_1d(&xs, &fs).unwrap();
        assert!(e.distance < 1e-15);
    }

    #[test]
    fn constants() {
        assert_eq!(hyers_ulam_constant(1), 0.5);
        assert!((hyers_ulam_constant(2) - 10.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn concave_planar_field() {
        let dom = DiscretizedDomain::build(DomainSpec::UnitSquare, 0.1).unwrap();
        let vals = (0..dom.n_unknowns()).map(|k| {
            let x = dom.node(k);
            1.0 - (x[0] - 0.4).powi(2) - 2.0 * (x[1] - 0.5).powi(2)
        });
        let f = Field::new(vals.collect(), Time::Finite(0.0));
        let e = concave_approximation(&dom, &f).unwrap();
        assert!(e.distance < 1e-12, "{}", e.distance);
        for (g, v) in e.g.values.iter().zip(&f.values) {
            assert!((g - v).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_planar_field() {
        let dom = DiscretizedDomain::build(DomainSpec::UnitSquare, 0.1).unwrap();
        let f = Field::new((0..dom.n_unknowns()).map(|k| dom.node(k)[0] * 2.0 - 1.0).collect(), Time::Finite(0.0));
        let e = concave_approximation(&dom, &f).unwrap();
        assert!(e.distance < 1e-12);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts = vec![[0.0, 0.0, 1.0], [1.0, 0.0, 2.0], [2.0, 0.0, 0.0], [3.0, 0.0, 1.0]];
        assert!(matches!(upper_planes(&pts), Err(Error::HullDegenerate(_))));
    }

    #[test]
    fn saddle_gets_envelope_certificate() {
        let dom = DiscretizedDomain::build(DomainSpec::UnitSquare, 0.1).unwrap();
        let f = Field::new(
            (0..dom.n_unknowns()).map(|k| {
                let x = dom.node(k);
                (x[0] - 0.5).powi(2) - (x[1] - 0.5).powi(2)
            }).collect(),
            Time::Finite(0.0),
        );
        let e = concave_approximation(&dom, &f).unwrap();
        assert!(e.distance > 0.0);
        assert!(e.certificate.satisfied, "{:?}", e.certificate);
        for (k, g) in e.g.values.iter().enumerate() {
            assert!((g - f.values[k]).abs() <= e.distance + 1e-12);
        }
    }
}
