use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{concavity_value, harmonic_concavity_value, Evaluator, Tuple5};
use crate::domain::Point;
use crate::error::{Error, Result};
use crate::operators::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `C*`: time held fixed.
    Space,
    /// `C`: independent times.
    Spacetime,
    /// `HC` over spacetime tuples.
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Cap on candidate points in the exhaustive scan.
    pub max_points: usize,
    /// Cap on finite candidate times in the exhaustive scan.
    pub max_times: usize,
    pub lambda_steps: usize,
    /// Scan minima handed to the refinement stage.
    pub candidates: usize,
    pub c_tol: f64,
    pub include_infinity: bool,
    pub max_rounds: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            max_points: 64,
            max_times: 8,
            lambda_steps: 16,
            candidates: 32,
            c_tol: 10.0,
            include_infinity: true,
            max_rounds: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub mode: Mode,
    pub min: f64,
    pub argmin: Tuple5,
    /// Spatial gradients at `(x1,t1)`, `(x2,t2)`, `(x3,t3)`.
    pub gradients: [Point; 3],
    /// Largest pairwise distance between the three gradients.
    pub gradient_mismatch: f64,
    pub tau_audit: f64,
    pub samples: usize,
}

impl DefectReport {
    /// Mean of the three argmin gradients.
    pub fn average_gradient(&self) -> Point {
        let g = &self.gradients;
        [(g[0][0] + g[1][0] + g[2][0]) / 3.0, (g[0][1] + g[1][1] + g[2][1]) / 3.0]
    }

    /// `min ≥ −τ_audit`.
    pub fn consistent_with_concavity(&self) -> bool {
        self.min >= -self.tau_audit
    }
}

fn subsample<T: Copy>(items: &[T], cap: usize) -> Vec<T> {
    if items.len() <= cap || cap == 0 {
        return items.to_vec();
    }
    if cap == 1 {
        return vec![items[items.len() - 1]];
    }
    (0..cap).map(|i| items[i * (items.len() - 1) / (cap - 1)]).collect()
}

/// Nodes on a centered sublattice of stride `k`, with the smallest `k` that fits `cap`.
fn lattice_subsample(nodes: &[Point], h: f64, cap: usize) -> (Vec<Point>, usize) {
    if nodes.len() <= cap {
        return (nodes.to_vec(), 1);
    }
    let x0 = nodes.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let y0 = nodes.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let idx = |p: &Point| (((p[0] - x0) / h).round() as usize, ((p[1] - y0) / h).round() as usize);
    let mut k = ((nodes.len() as f64 / cap as f64).sqrt().ceil() as usize).max(2);
    loop {
        let sel: Vec<Point> = nodes
            .iter()
            .filter(|p| {
                let (i, j) = idx(p);
                i % k == k / 2 && j % k == k / 2
            })
            .copied()
            .collect();
        if sel.len() < 2 {
            return (subsample(nodes, cap), k);
        }
        if sel.len() <= cap {
            return (sel, k);
        }
        k += 1;
    }
}

fn value<E: Evaluator + ?Sized>(ev: &E, mode: Mode, tup: &Tuple5) -> Result<f64> {
    match mode {
        Mode::Space | Mode::Spacetime => concavity_value(ev, tup),
        Mode::Harmonic => Ok(harmonic_concavity_value(ev, tup)?.unwrap_or(f64::INFINITY)),
    }
}

fn golden_section(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..48 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

fn refine<E: Evaluator + ?Sized>(
    ev: &E,
    mode: Mode,
    finite: &[Time],
    start: (f64, Tuple5),
    coarse: f64,
    cfg: &SamplerConfig,
) -> Result<(f64, Tuple5)> {
    let (mut best, mut tup) = start;
    let mut step = coarse;
    while step >= 0.25 * ev.spacing() * (1.0 - 1e-9) {
        (best, tup) = descend(ev, mode, finite, (best, tup), step, cfg)?;
        step /= 2.0;
    }
    Ok((best, tup))
}

fn descend<E: Evaluator + ?Sized>(
    ev: &E,
    mode: Mode,
    finite: &[Time],
    start: (f64, Tuple5),
    h: f64,
    cfg: &SamplerConfig,
) -> Result<(f64, Tuple5)> {
    let (mut best, mut tup) = start;
    let dl = 1.0 / cfg.lambda_steps.max(1) as f64;
    let shift_time = |t: Time, step: isize| -> Option<Time> {
        let i = finite.iter().position(|s| *s == t)? as isize + step;
        (i >= 0 && (i as usize) < finite.len()).then(|| finite[i as usize])
    };
    for _ in 0..cfg.max_rounds {
        let mut improved = false;
        let mut trial = |cand: Tuple5, best: &mut f64, tup: &mut Tuple5| -> Result<()> {
            if cand.x1 == cand.x3 || !ev.contains(cand.x1) || !ev.contains(cand.x3) {
                return Ok(());
            }
            let v = value(ev, mode, &cand)?;
            if v < *best - 1e-15 {
                *best = v;
                *tup = cand;
                improved = true;
            }
            Ok(())
        };
        for e in [[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]] {
            let mut c = tup;
            c.x1 = [tup.x1[0] + e[0], tup.x1[1] + e[1]];
            trial(c, &mut best, &mut tup)?;
            let mut c = tup;
            c.x3 = [tup.x3[0] + e[0], tup.x3[1] + e[1]];
            trial(c, &mut best, &mut tup)?;
        }
        for step in [-1isize, 1] {
            if mode == Mode::Space {
                if let Some(t) = shift_time(tup.t1, step) {
                    let mut c = tup;
                    c.t1 = t;
                    c.t3 = t;
                    trial(c, &mut best, &mut tup)?;
                }
            } else {
                if let Some(t) = shift_time(tup.t1, step) {
                    let mut c = tup;
                    c.t1 = t;
                    trial(c, &mut best, &mut tup)?;
                }
                if let Some(t) = shift_time(tup.t3, step) {
                    let mut c = tup;
                    c.t3 = t;
                    trial(c, &mut best, &mut tup)?;
                }
            }
        }
        let base = tup;
        let (lo, hi) = ((base.lambda - dl).max(0.0), (base.lambda + dl).min(1.0));
        let (l, v) = golden_section(|l| value(ev, mode, &Tuple5 { lambda: l, ..base }), lo, hi)?;
        if v < best - 1e-15 {
            best = v;
            tup.lambda = l;
            improved = true;
        }
        if !improved {
            break;
        }
    }
    Ok((best, tup))
}

fn gradient<E: Evaluator + ?Sized>(ev: &E, x: Point, t: Time) -> Point {
    let h = ev.spacing();
    let mut g = [0.0; 2];
    for (i, gi) in g.iter_mut().enumerate() {
        let mut p = x;
        let mut m = x;
        p[i] += h;
        m[i] -= h;
        let c = ev.eval(x, t).ok();
        *gi = match (ev.eval(p, t).ok(), ev.eval(m, t).ok(), c) {
            (Some(a), Some(b), _) => (a - b) / (2.0 * h),
            (Some(a), None, Some(c)) => (a - c) / h,
            (None, Some(b), Some(c)) => (c - b) / h,
            _ => 0.0,
        };
    }
    g
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Two-stage minimization of a concavity function: exhaustive scan over a
/// lattice subsample, then multiscale coordinate descent with golden-section
/// search in `λ` around the best scan candidates.
pub fn min_defect<E: Evaluator + ?Sized>(ev: &E, mode: Mode, cfg: &SamplerConfig) -> Result<DefectReport> {
    let nodes = ev.nodes();
    let all_times = ev.times();
    let finite: Vec<Time> = all_times.iter().copied().filter(|t| !t.is_infinite()).collect();
    let with_inf = cfg.include_infinity && all_times.iter().any(|t| t.is_infinite());
    if nodes.len() < 2 || (finite.is_empty() && !with_inf) || cfg.max_points < 2 {
        return Err(Error::EmptySampler);
    }
    if with_inf && mode != Mode::Space && !finite.is_empty() && !ev.monotone() {
        return Err(Error::HypothesisViolated("∞ markers need a trajectory with v_t ≥ 0".into()));
    }
    let (pts, stride) = lattice_subsample(&nodes, ev.spacing(), cfg.max_points);
    let scan_times = subsample(&finite, cfg.max_times);
    let mut time_pairs: Vec<(Time, Time)> = match mode {
        Mode::Space => scan_times.iter().map(|&t| (t, t)).collect(),
        _ => scan_times.iter().flat_map(|&a| scan_times.iter().map(move |&b| (a, b))).collect(),
    };
    if with_inf {
        time_pairs.push((Time::Infinity, Time::Infinity));
    }
    let lambdas: Vec<f64> = (0..=cfg.lambda_steps).map(|k| k as f64 / cfg.lambda_steps as f64).collect();

    let pairs: Vec<(usize, usize)> =
        (0..pts.len()).flat_map(|i| (i + 1..pts.len()).map(move |j| (i, j))).collect();
    let scanned: Vec<(f64, Tuple5)> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<(f64, Tuple5)> {
            let mut best = (f64::INFINITY, Tuple5::spatial(pts[i], pts[j], time_pairs[0].0, 0.5));
            for &(t1, t3) in &time_pairs {
                for &l in &lambdas {
                    let tup = Tuple5 { x1: pts[i], x3: pts[j], t1, t3, lambda: l };
                    let v = value(ev, mode, &tup)?;
                    if v < best.0 {
                        best = (v, tup);
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let samples = pairs.len() * time_pairs.len() * lambdas.len();

    let mut order: Vec<usize> = (0..scanned.len()).collect();
    order.sort_by(|&a, &b| scanned[a].0.total_cmp(&scanned[b].0).then(a.cmp(&b)));
    order.truncate(cfg.candidates.max(1));
    // Moves start near the subsample stride and halve down to a quarter of the grid spacing.
    let coarse = ev.spacing() * 2f64.powi((stride as f64).log2().floor() as i32);
    let refined: Vec<(f64, Tuple5)> = order
        .par_iter()
        .map(|&k| refine(ev, mode, &finite, scanned[k], coarse, cfg))
        .collect::<Result<_>>()?;
    let (min, argmin) = refined
        .iter()
        .copied()
        .fold((f64::INFINITY, scanned[order[0]].1), |acc, c| if c.0 < acc.0 { c } else { acc });

    let (t1, t2, t3) = argmin.times();
    let gradients = [gradient(ev, argmin.x1, t1), gradient(ev, argmin.x2(), t2), gradient(ev, argmin.x3, t3)];
    let gradient_mismatch = dist(gradients[0], gradients[1])
        .max(dist(gradients[1], gradients[2]))
        .max(dist(gradients[0], gradients[2]));
    let h = ev.spacing();
    let tau_audit = (cfg.c_tol * h * h * ev.curvature_scale()).max(1e-14);
    Ok(DefectReport { mode, min, argmin, gradients, gradient_mismatch, tau_audit, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::FnEvaluator;
    use crate::domain::DomainSpec;

    #[test]
    fn quadratic_slice_minimum() {
        let ev = FnEvaluator::on_domain(DomainSpec::UnitSquare, 0.1, |x, _| x[0] * x[0]);
        let r = min_defect(&ev, Mode::Space, &SamplerConfig::default()).unwrap();
        assert!((r.min + 0.25).abs() < 1e-9, "{}", r.min);
        assert!((r.argmin.lambda - 0.5).abs() < 1e-6);
        assert!((r.argmin.x1[0] - r.argmin.x3[0]).abs() > 1.0 - 1e-9);
    }

    #[test]
    fn concave_field_has_no_defect() {
        let ev = FnEvaluator::on_domain(DomainSpec::UnitSquare, 0.1, |x, _| -(x[0] - 0.3).powi(2) - x[1] * x[1]);
        let r = min_defect(&ev, Mode::Space, &SamplerConfig::default()).unwrap();
        assert!(r.min >= -1e-14 && r.min <= 0.0);
    }

    #[test]
    fn empty_sampler() {
        let ev = FnEvaluator::on_domain(DomainSpec::UnitSquare, 0.1, |x, _| x[0]);
        let cfg = SamplerConfig { max_points: 0, ..SamplerConfig::default() };
        assert_eq!(min_defect(&ev, Mode::Space, &cfg), Err(Error::EmptySampler));
        let ev = ev.with_times(vec![]);
        assert_eq!(min_defect(&ev, Mode::Space, &SamplerConfig::default()), Err(Error::EmptySampler));
    }

    #[test]
    fn spacetime_bilinear_defect() {
        let times = (0..=10).map(|k| Time::Finite(k as f64 / 10.0)).collect();
        let ev = FnEvaluator::on_domain(DomainSpec::UnitSquare, 0.1, |x, t| x[0] * t).with_times(times);
        let r = min_defect(&ev, Mode::Spacetime, &SamplerConfig::default()).unwrap();
        assert!((r.min + 0.25).abs() < 1e-9, "{}", r.min);
    }
}
