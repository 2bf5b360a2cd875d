//! Convex planar domains and their uniform-grid discretizations.
//!
//! Points are `[x, y]` in dimensionless coordinates. Signed distances are
//! positive inside the domain and negative outside.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

const CONVEXITY_TOL: f64 = 1e-12;
const ELLIPSE_TOL: f64 = 1e-10;
const BOUNDARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// `[0,1]²`.
    UnitSquare,
    /// `[0,width]×[0,height]`.
    Rectangle { width: f64, height: f64 },
    /// Disk centered at the origin.
    Disk { radius: f64 },
    /// `x²/a² + y²/b² < 1`.
    Ellipse { a: f64, b: f64 },
    /// Counterclockwise vertex list.
    ConvexPolygon { vertices: Vec<Point> },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::UnitSquare => Ok(()),
            DomainSpec::Rectangle { width, height } => {
                if *width > 0.0 && *height > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidDomain("rectangle sides must be positive".into()))
                }
            }
            DomainSpec::Disk { radius } => {
                if *radius > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidDomain("radius must be positive".into()))
                }
            }
            DomainSpec::Ellipse { a, b } => {
                if *a > 0.0 && *b > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidDomain("semi-axes must be positive".into()))
                }
            }
            DomainSpec::ConvexPolygon { vertices } => check_polygon(vertices),
        }
    }

    /// True exactly for disks and ellipses.
    pub fn strongly_convex(&self) -> bool {
        matches!(self, DomainSpec::Disk { .. } | DomainSpec::Ellipse { .. })
    }

    /// `[xmin, ymin, xmax, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        match self {
            DomainSpec::UnitSquare => [0.0, 0.0, 1.0, 1.0],
            DomainSpec::Rectangle { width, height } => [0.0, 0.0, *width, *height],
            DomainSpec::Disk { radius } => [-radius, -radius, *radius, *radius],
            DomainSpec::Ellipse { a, b } => [-a, -b, *a, *b],
            DomainSpec::ConvexPolygon { vertices } => {
                let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
                for v in vertices {
                    bb[0] = bb[0].min(v[0]);
                    bb[1] = bb[1].min(v[1]);
                    bb[2] = bb[2].max(v[0]);
                    bb[3] = bb[3].max(v[1]);
                }
                bb
            }
        }
    }

    /// A point with maximal distance to the boundary (for polygons, the best vertex-average guess).
    pub fn center(&self) -> Point {
        match self {
            DomainSpec::UnitSquare => [0.5, 0.5],
            DomainSpec::Rectangle { width, height } => [width / 2.0, height / 2.0],
            DomainSpec::Disk { .. } | DomainSpec::Ellipse { .. } => [0.0, 0.0],
            DomainSpec::ConvexPolygon { vertices } => {
                let n = vertices.len() as f64;
                let sx: f64 = vertices.iter().map(|v| v[0]).sum();
                let sy: f64 = vertices.iter().map(|v| v[1]).sum();
                [sx / n, sy / n]
            }
        }
    }

    pub fn inradius(&self) -> f64 {
        match self {
            DomainSpec::UnitSquare => 0.5,
            DomainSpec::Rectangle { width, height } => width.min(*height) / 2.0,
            DomainSpec::Disk { radius } => *radius,
            DomainSpec::Ellipse { a, b } => a.min(*b),
            DomainSpec::ConvexPolygon { .. } => {
                // The interior distance is concave, so a refined sampling converges.
                let bb = self.bounding_box();
                let mut best = self.signed_distance(self.center());
                let mut c = self.center();
                let mut step = (bb[2] - bb[0]).max(bb[3] - bb[1]) / 8.0;
                while step > 1e-12 {
                    let mut moved = false;
                    for dx in [-1.0, 0.0, 1.0] {
                        for dy in [-1.0, 0.0, 1.0] {
                            let p = [c[0] + dx * step, c[1] + dy * step];
                            let d = self.signed_distance(p);
                            if d > best {
                                best = d;
                                c = p;
                                moved = true;
                            }
                        }
                    }
                    if !moved {
                        step /= 2.0;
                    }
                }
                best
            }
        }
    }

    /// Euclidean distance to the boundary, negative outside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        match self {
            DomainSpec::UnitSquare => box_signed_distance(p, 1.0, 1.0),
            DomainSpec::Rectangle { width, height } => box_signed_distance(p, *width, *height),
            DomainSpec::Disk { radius } => radius - p[0].hypot(p[1]),
            DomainSpec::Ellipse { a, b } => ellipse_signed_distance(p, *a, *b),
            DomainSpec::ConvexPolygon { vertices } => polygon_signed_distance(p, vertices),
        }
    }

    /// Distance along the unit direction `dir` from an inside point `p` to the boundary.
    pub fn ray_exit(&self, p: Point, dir: Point) -> f64 {
        match self {
            DomainSpec::UnitSquare => box_ray_exit(p, dir, 1.0, 1.0),
            DomainSpec::Rectangle { width, height } => box_ray_exit(p, dir, *width, *height),
            DomainSpec::Disk { radius } => quadric_ray_exit(p, dir, *radius, *radius),
            DomainSpec::Ellipse { a, b } => quadric_ray_exit(p, dir, *a, *b),
            DomainSpec::ConvexPolygon { vertices } => {
                let mut best = f64::INFINITY;
                for (n, c) in polygon_halfplanes(vertices) {
                    let nd = n[0] * dir[0] + n[1] * dir[1];
                    if nd < 0.0 {
                        let t = (c - (n[0] * p[0] + n[1] * p[1])) / nd;
                        best = best.min(t.max(0.0));
                    }
                }
                best
            }
        }
    }

    /// Unit inward normal at a boundary point.
    pub fn boundary_normal(&self, p: Point) -> Result<Point> {
        let sd = self.signed_distance(p);
        if sd.abs() > BOUNDARY_TOL {
            return Err(Error::NotOnBoundary(sd));
        }
        match self {
            DomainSpec::Disk { .. } => Ok(normalize([-p[0], -p[1]])),
            DomainSpec::Ellipse { a, b } => Ok(normalize([-p[0] / (a * a), -p[1] / (b * b)])),
            DomainSpec::UnitSquare => polygon_normal(p, &rect_vertices(1.0, 1.0)),
            DomainSpec::Rectangle { width, height } => {
                polygon_normal(p, &rect_vertices(*width, *height))
            }
            DomainSpec::ConvexPolygon { vertices } => polygon_normal(p, vertices),
        }
    }
}

fn normalize(v: Point) -> Point {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

fn rect_vertices(w: f64, h: f64) -> Vec<Point> {
    vec![[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]
}

fn box_signed_distance(p: Point, w: f64, h: f64) -> f64 {
    let inside = p[0] > 0.0 && p[0] < w && p[1] > 0.0 && p[1] < h;
    if inside {
        p[0].min(w - p[0]).min(p[1]).min(h - p[1])
    } else {
        let dx = (-p[0]).max(p[0] - w).max(0.0);
        let dy = (-p[1]).max(p[1] - h).max(0.0);
        -dx.hypot(dy)
    }
}

fn box_ray_exit(p: Point, dir: Point, w: f64, h: f64) -> f64 {
    let mut best = f64::INFINITY;
    for (k, hi) in [(0usize, w), (1usize, h)] {
        if dir[k] > 0.0 {
            best = best.min((hi - p[k]) / dir[k]);
        } else if dir[k] < 0.0 {
            best = best.min(-p[k] / dir[k]);
        }
    }
    best.max(0.0)
}

fn quadric_ray_exit(p: Point, dir: Point, a: f64, b: f64) -> f64 {
    let qa = (dir[0] / a).powi(2) + (dir[1] / b).powi(2);
    let qb = 2.0 * (p[0] * dir[0] / (a * a) + p[1] * dir[1] / (b * b));
    let qc = (p[0] / a).powi(2) + (p[1] / b).powi(2) - 1.0;
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    // Stable form of the positive root when qc <= 0.
    let t = if qb >= 0.0 {
        (-2.0 * qc) / (qb + disc.sqrt())
    } else {
        (-qb + disc.sqrt()) / (2.0 * qa)
    };
    t.max(0.0)
}

/// Nearest-point distance to an ellipse, reduced to the first quadrant and
/// solved by bisection on the Lagrange multiplier.
fn ellipse_signed_distance(p: Point, a: f64, b: f64) -> f64 {
    let (a, b, x, y) = if a >= b {
        (a, b, p[0].abs(), p[1].abs())
    } else {
        (b, a, p[1].abs(), p[0].abs())
    };
    let inside = (x / a).powi(2) + (y / b).powi(2) < 1.0;
    let d = if y > 0.0 {
        if x > 0.0 {
            let f = |t: f64| (a * x / (t + a * a)).powi(2) + (b * y / (t + b * b)).powi(2) - 1.0;
            // f decreases from +inf at t = -b² and crosses zero once.
            let mut lo = -b * b;
            let mut hi = (a * a * x * x + b * b * y * y).sqrt();
            let mut mid = 0.5 * (lo + hi);
            for _ in 0..200 {
                mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < ELLIPSE_TOL * 1e-4 * b {
                    break;
                }
            }
            let x0 = a * a * x / (mid + a * a);
            let y0 = b * b * y / (mid + b * b);
            (x0 - x).hypot(y0 - y)
        } else {
            (y - b).abs()
        }
    } else {
        let lim = (a * a - b * b) / a;
        if x < lim {
            let x0 = a * a * x / (a * a - b * b);
            let y0 = b * (1.0 - (x0 / a).powi(2)).max(0.0).sqrt();
            (x0 - x).hypot(y0)
        } else {
            (x - a).abs()
        }
    };
    if inside {
        d
    } else {
        -d
    }
}

fn check_polygon(vertices: &[Point]) -> Result<()> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::NonConvexPolygon);
    }
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross <= CONVEXITY_TOL {
            return Err(Error::NonConvexPolygon);
        }
    }
    // Winding number one rules out self-intersecting stars.
    let mut turn = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        let e1 = [b[0] - a[0], b[1] - a[1]];
        let e2 = [c[0] - b[0], c[1] - b[1]];
        turn += (e1[0] * e2[1] - e1[1] * e2[0]).atan2(e1[0] * e2[0] + e1[1] * e2[1]);
    }
    if (turn - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
        return Err(Error::NonConvexPolygon);
    }
    Ok(())
}

/// Inward unit normals `n` and offsets `c` with the domain equal to `{n·x > c}`.
fn polygon_halfplanes(vertices: &[Point]) -> Vec<(Point, f64)> {
    let n = vertices.len();
    (0..n)
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let nrm = normalize([-(b[1] - a[1]), b[0] - a[0]]);
            (nrm, nrm[0] * a[0] + nrm[1] * a[1])
        })
        .collect()
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
    (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1])
}

fn polygon_signed_distance(p: Point, vertices: &[Point]) -> f64 {
    let inside = polygon_halfplanes(vertices)
        .iter()
        .all(|(n, c)| n[0] * p[0] + n[1] * p[1] > *c);
    let n = vertices.len();
    let d = (0..n)
        .map(|i| segment_distance(p, vertices[i], vertices[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min);
    if inside {
        d
    } else {
        -d
    }
}

fn polygon_normal(p: Point, vertices: &[Point]) -> Result<Point> {
    let n = vertices.len();
    for v in vertices {
        if (p[0] - v[0]).hypot(p[1] - v[1]) <= BOUNDARY_TOL {
            return Err(Error::VertexAmbiguity);
        }
    }
    let planes = polygon_halfplanes(vertices);
    (0..n)
        .filter(|&i| segment_distance(p, vertices[i], vertices[(i + 1) % n]) <= BOUNDARY_TOL)
        .map(|i| planes[i].0)
        .next()
        .ok_or(Error::NotOnBoundary(polygon_signed_distance(p, vertices)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    Interior,
    BoundaryBand,
    Exterior,
}

/// What lies one grid step away from an interior node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Neighbor {
    /// Another interior node, by unknown index.
    Node(usize),
    /// The boundary, crossed at fraction `θ ∈ (0,1]` of a grid step.
    Cut(f64),
}

/// Neighbors of an interior node in the order east, west, north, south.
pub type Stencil = [Neighbor; 4];

pub const DIRECTIONS: [Point; 4] = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];

/// A convex domain sampled on a uniform grid covering its bounding box.
#[derive(Debug, Clone)]
pub struct DiscretizedDomain {
    pub spec: DomainSpec,
    pub h: f64,
    pub origin: Point,
    pub nx: usize,
    pub ny: usize,
    /// Per grid node, row-major with `x` fastest.
    pub class: Vec<NodeClass>,
    /// Signed distance per grid node.
    pub dist: Vec<f64>,
    /// Grid index of each interior node (unknown).
    pub interior: Vec<usize>,
    /// Unknown index per grid node, `usize::MAX` for non-interior nodes.
    pub unknown_of: Vec<usize>,
    pub stencils: Vec<Stencil>,
}

impl DiscretizedDomain {
    pub fn build(spec: DomainSpec, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::RangeViolation(format!("h must be positive, got {h}")));
        }
        spec.validate()?;
        if h >= spec.inradius() {
            return Err(Error::NoInteriorNodes { h });
        }
        let bb = spec.bounding_box();
        let nx = ((bb[2] - bb[0]) / h - 1e-9).ceil() as usize + 1;
        let ny = ((bb[3] - bb[1]) / h - 1e-9).ceil() as usize + 1;
        let origin = [bb[0], bb[1]];
        let mut class = Vec::with_capacity(nx * ny);
        let mut dist = Vec::with_capacity(nx * ny);
        let mut interior = Vec::new();
        let mut unknown_of = vec![usize::MAX; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let p = [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
                let d = spec.signed_distance(p);
                let c = if d > CONVEXITY_TOL {
                    unknown_of[j * nx + i] = interior.len();
                    interior.push(j * nx + i);
                    NodeClass::Interior
                } else if d >= -h {
                    NodeClass::BoundaryBand
                } else {
                    NodeClass::Exterior
                };
                class.push(c);
                dist.push(d);
            }
        }
        if interior.is_empty() {
            return Err(Error::NoInteriorNodes { h });
        }
        let mut stencils = Vec::with_capacity(interior.len());
        for &g in &interior {
            let (i, j) = (g % nx, g / nx);
            let p = [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
            let offsets: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
            let mut st = [Neighbor::Cut(1.0); 4];
            for (k, (di, dj)) in offsets.iter().enumerate() {
                let ni = i as isize + di;
                let nj = j as isize + dj;
                let inside = ni >= 0 && nj >= 0 && (ni as usize) < nx && (nj as usize) < ny;
                let ng = if inside { Some(nj as usize * nx + ni as usize) } else { None };
                st[k] = match ng {
                    Some(ng) if unknown_of[ng] != usize::MAX => Neighbor::Node(unknown_of[ng]),
                    _ => {
                        let t = spec.ray_exit(p, DIRECTIONS[k]) / h;
                        Neighbor::Cut(t.clamp(1e-12, 1.0))
                    }
                };
            }
            stencils.push(st);
        }
        Ok(DiscretizedDomain { spec, h, origin, nx, ny, class, dist, interior, unknown_of, stencils })
    }

    pub fn n_unknowns(&self) -> usize {
        self.interior.len()
    }

    pub fn grid_point(&self, g: usize) -> Point {
        let (i, j) = (g % self.nx, g / self.nx);
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    /// Coordinates of the `k`-th interior node.
    pub fn node(&self, k: usize) -> Point {
        self.grid_point(self.interior[k])
    }

    /// Distance to the boundary of the `k`-th interior node.
    pub fn node_distance(&self, k: usize) -> f64 {
        self.dist[self.interior[k]]
    }

    /// Interior nodes with `d_Ω > ρ`.
    pub fn inner_region_mask(&self, rho: f64) -> Vec<bool> {
        self.interior.iter().map(|&g| self.dist[g] > rho).collect()
    }

    /// True when all four neighbors of interior node `k` are interior nodes.
    pub fn is_full_interior(&self, k: usize) -> bool {
        self.stencils[k].iter().all(|n| matches!(n, Neighbor::Node(_)))
    }

    /// Scatters unknowns onto the full grid with zeros elsewhere.
    pub fn to_grid(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nx * self.ny];
        for (k, &g) in self.interior.iter().enumerate() {
            out[g] = values[k];
        }
        out
    }

    /// Bilinear interpolation of full-grid values; `None` outside the grid box.
    pub fn interpolate(&self, grid: &[f64], p: Point) -> Option<f64> {
        let fx = (p[0] - self.origin[0]) / self.h;
        let fy = (p[1] - self.origin[1]) / self.h;
        let eps = 1e-9;
        if fx < -eps || fy < -eps || fx > (self.nx - 1) as f64 + eps || fy > (self.ny - 1) as f64 + eps {
            return None;
        }
        let i = (fx.floor().max(0.0) as usize).min(self.nx - 2);
        let j = (fy.floor().max(0.0) as usize).min(self.ny - 2);
        let s = (fx - i as f64).clamp(0.0, 1.0);
        let r = (fy - j as f64).clamp(0.0, 1.0);
        let g = j * self.nx + i;
        let v00 = grid[g];
        let v10 = grid[g + 1];
        let v01 = grid[g + self.nx];
        let v11 = grid[g + self.nx + 1];
        Some((1.0 - r) * ((1.0 - s) * v00 + s * v10) + r * ((1.0 - s) * v01 + s * v11))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_quarter_spacing() {
        let d = DiscretizedDomain::build(DomainSpec::UnitSquare, 0.25).unwrap();
        assert_eq!((d.nx, d.ny), (5, 5));
        assert_eq!(d.n_unknowns(), 9);
    }

    #[test]
    fn disk_half_spacing_has_nine_interior_nodes() {
        let d = DiscretizedDomain::build(DomainSpec::Disk { radius: 1.0 }, 0.5).unwrap();
        // Oracle: enumerate the 5x5 lattice on [-1,1]² and keep |p| < 1.
        let mut count = 0;
        for i in 0..5 {
            for j in 0..5 {
                let p = [-1.0 + 0.5 * i as f64, -1.0 + 0.5 * j as f64];
                if p[0].hypot(p[1]) < 1.0 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 9);
        assert_eq!(d.n_unknowns(), count);
    }

    #[test]
    fn coarse_spacing_is_rejected() {
        assert!(matches!(
            DiscretizedDomain::build(DomainSpec::UnitSquare, 2.0),
            Err(Error::NoInteriorNodes { .. })
        ));
    }

    #[test]
    fn distances() {
        assert_eq!(DomainSpec::UnitSquare.signed_distance([0.5, 0.5]), 0.5);
        let disk = DomainSpec::Disk { radius: 1.0 };
        assert!((disk.signed_distance([0.3, 0.4]) - 0.5).abs() < 1e-15);
        let ell = DomainSpec::Ellipse { a: 2.0, b: 1.0 };
        assert!((ell.signed_distance([0.0, 0.0]) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ellipse_distance_matches_dense_boundary_sampling() {
        let (a, b) = (2.0, 1.0);
        let ell = DomainSpec::Ellipse { a, b };
        let n = 200_000;
        for p in [[0.3, 0.2], [1.5, 0.1], [-1.2, -0.5], [0.0, 0.9], [1.9, 0.0], [2.5, 1.0]] {
            let mut best = f64::INFINITY;
            for k in 0..n {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                best = best.min((a * t.cos() - p[0]).hypot(b * t.sin() - p[1]));
            }
            assert!((ell.signed_distance(p).abs() - best).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn inner_region_examples() {
        let d = DiscretizedDomain::build(DomainSpec::UnitSquare, 0.25).unwrap();
        let mask = d.inner_region_mask(0.3);
        let picked: Vec<Point> = (0..d.n_unknowns()).filter(|&k| mask[k]).map(|k| d.node(k)).collect();
        assert_eq!(picked, vec![[0.5, 0.5]]);
        assert!(d.inner_region_mask(0.0).iter().all(|&m| m));
        assert!(d.inner_region_mask(0.5).iter().all(|&m| !m));
    }

    #[test]
    fn normals() {
        let disk = DomainSpec::Disk { radius: 1.0 };
        assert_eq!(disk.boundary_normal([1.0, 0.0]).unwrap(), [-1.0, 0.0]);
        assert_eq!(DomainSpec::UnitSquare.boundary_normal([0.0, 0.5]).unwrap(), [1.0, 0.0]);
        let ell = DomainSpec::Ellipse { a: 2.0, b: 1.0 };
        assert_eq!(ell.boundary_normal([2.0, 0.0]).unwrap(), [-1.0, 0.0]);
        assert_eq!(
            DomainSpec::UnitSquare.boundary_normal([0.0, 0.0]),
            Err(Error::VertexAmbiguity)
        );
    }

    #[test]
    fn polygon_validation() {
        let ccw = DomainSpec::ConvexPolygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] };
        assert!(ccw.validate().is_ok());
        let cw = DomainSpec::ConvexPolygon { vertices: vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]] };
        assert_eq!(cw.validate(), Err(Error::NonConvexPolygon));
        let dart = DomainSpec::ConvexPolygon {
            vertices: vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.2], [1.0, 2.0]],
        };
        assert_eq!(dart.validate(), Err(Error::NonConvexPolygon));
    }

    #[test]
    fn cut_fractions_on_disk() {
        let d = DiscretizedDomain::build(DomainSpec::Disk { radius: 1.0 }, 0.5).unwrap();
        let k = (0..d.n_unknowns()).find(|&k| d.node(k) == [0.5, 0.0]).unwrap();
        // East neighbor (1,0) sits on the circle: the full step is the fraction.
        assert_eq!(d.stencils[k][0], Neighbor::Cut(1.0));
        let k = (0..d.n_unknowns()).find(|&k| d.node(k) == [0.5, 0.5]).unwrap();
        let expect = ((1.0f64 - 0.25).sqrt() - 0.5) / 0.5;
        match d.stencils[k][0] {
            Neighbor::Cut(t) => assert!((t - expect).abs() < 1e-14),
            n => panic!("unexpected {n:?}"),
        }
    }
}
