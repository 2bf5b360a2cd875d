use crate::domain::{DiscretizedDomain, DomainSpec, Point};
use crate::error::{Error, Result};
use crate::operators::{Field, Time};
use crate::parabolic::Trajectory;

/// A field that can be evaluated at arbitrary points of its audit region.
pub trait Evaluator: Sync {
    fn eval(&self, x: Point, t: Time) -> Result<f64>;
    /// Step used for refinement moves and finite-difference gradients.
    fn spacing(&self) -> f64;
    /// Candidate points for `x1`, `x3`.
    fn nodes(&self) -> Vec<Point>;
    /// Candidate times: finite ones ascending, then `∞` when available.
    fn times(&self) -> Vec<Time>;
    fn contains(&self, x: Point) -> bool;
    /// Largest undivided second difference over nodes and times, divided by `h²`.
    fn curvature_scale(&self) -> f64;
    /// Whether `v_t ≥ 0` was observed (needed for `∞` in spacetime tuples).
    fn monotone(&self) -> bool {
        true
    }
}

/// Closure-backed evaluator for analytic fields.
pub struct FnEvaluator {
    f: Box<dyn Fn(Point, f64) -> f64 + Sync + Send>,
    spec: DomainSpec,
    h: f64,
    margin: f64,
    times: Vec<Time>,
}

impl FnEvaluator {
    /// Nodes of spacing `h` in the closed domain, single time `t = 1`.
    pub fn on_domain(spec: DomainSpec, h: f64, f: impl Fn(Point, f64) -> f64 + Sync + Send + 'static) -> Self {
        FnEvaluator { f: Box::new(f), spec, h, margin: 0.0, times: vec![Time::Finite(1.0)] }
    }

    pub fn with_times(mut self, times: Vec<Time>) -> Self {
        self.times = times;
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }
}

impl Evaluator for FnEvaluator {
    fn eval(&self, x: Point, t: Time) -> Result<f64> {
        if self.spec.signed_distance(x) < -1e-12 {
            return Err(Error::OutOfDomain);
        }
        Ok((self.f)(x, t.as_f64()))
    }

    fn spacing(&self) -> f64 {
        self.h
    }

    fn nodes(&self) -> Vec<Point> {
        let bb = self.spec.bounding_box();
        let nx = ((bb[2] - bb[0]) / self.h + 1e-9).floor() as usize + 1;
        let ny = ((bb[3] - bb[1]) / self.h + 1e-9).floor() as usize + 1;
        let mut out = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let p = [bb[0] + i as f64 * self.h, bb[1] + j as f64 * self.h];
                if self.contains(p) {
                    out.push(p);
                }
            }
        }
        out
    }

    fn times(&self) -> Vec<Time> {
        self.times.clone()
    }

    fn contains(&self, x: Point) -> bool {
        self.spec.signed_distance(x) >= self.margin - 1e-12
    }

    fn curvature_scale(&self) -> f64 {
        let h = self.h;
        let mut m = 0.0f64;
        for p in self.nodes() {
            for t in &self.times {
                let t = t.as_f64();
                let c = (self.f)(p, t);
                for e in [[h, 0.0], [0.0, h]] {
                    let a = [p[0] + e[0], p[1] + e[1]];
                    let b = [p[0] - e[0], p[1] - e[1]];
                    if self.contains(a) && self.contains(b) {
                        m = m.max(((self.f)(a, t) - 2.0 * c + (self.f)(b, t)).abs());
                    }
                }
            }
        }
        m / (h * h)
    }
}

/// `v(x,τ) = u^α(x, τ^β)` (or `log u` for `α = 0`) over stored snapshots,
/// interpolating `u` bilinearly in space and linearly in time before transforming.
pub struct TransformedTrajectory<'a> {
    dom: &'a DiscretizedDomain,
    alpha: f64,
    beta: f64,
    margin: f64,
    /// Snapshot times of `u` (strictly positive, ascending) with full-grid values.
    times: Vec<f64>,
    grids: Vec<Vec<f64>>,
    stationary: Option<Vec<f64>>,
    monotone: bool,
    curvature: f64,
}

/// Single-field evaluator (a trajectory with one snapshot).
pub type FieldEvaluator<'a> = TransformedTrajectory<'a>;

fn transform(alpha: f64, u: f64) -> Result<f64> {
    if alpha == 0.0 {
        if u <= 0.0 {
            return Err(Error::NonpositiveValue(u));
        }
        Ok(u.ln())
    } else if alpha == 1.0 {
        Ok(u)
    } else {
        Ok(u.max(0.0).powf(alpha))
    }
}

fn check_exponents(alpha: f64, beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::RangeViolation(format!("α must lie in [0,1], got {alpha}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::RangeViolation(format!("β must be positive, got {beta}")));
    }
    Ok(())
}

/// Transformed evaluator over a trajectory and its stationary slice.
/// Audit nodes are interior nodes farther than `margin` from the boundary.
pub fn power_transform<'a>(
    dom: &'a DiscretizedDomain,
    traj: &Trajectory,
    alpha: f64,
    beta: f64,
    margin: f64,
) -> Result<TransformedTrajectory<'a>> {
    check_exponents(alpha, beta)?;
    let mut times = Vec::new();
    let mut grids = Vec::new();
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        if *t > 0.0 {
            times.push(*t);
            grids.push(dom.to_grid(f));
        }
    }
    let stationary = traj.stationary.as_ref().map(|s| dom.to_grid(&s.v.values));
    TransformedTrajectory::assemble(dom, alpha, beta, margin, times, grids, stationary, traj.monotone)
}

impl<'a> TransformedTrajectory<'a> {
    /// Evaluator of a single field at its own time stamp.
    pub fn from_field(dom: &'a DiscretizedDomain, field: &Field, alpha: f64, margin: f64) -> Result<Self> {
        check_exponents(alpha, 1.0)?;
        let grid = dom.to_grid(&field.values);
        match field.time {
            Time::Finite(t) => Self::assemble(dom, alpha, 1.0, margin, vec![t], vec![grid], None, true),
            Time::Infinity => Self::assemble(dom, alpha, 1.0, margin, vec![], vec![], Some(grid), true),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dom: &'a DiscretizedDomain,
        alpha: f64,
        beta: f64,
        margin: f64,
        times: Vec<f64>,
        grids: Vec<Vec<f64>>,
        stationary: Option<Vec<f64>>,
        monotone: bool,
    ) -> Result<Self> {
        let mut ev = TransformedTrajectory { dom, alpha, beta, margin, times, grids, stationary, monotone, curvature: 0.0 };
        ev.curvature = ev.compute_curvature()?;
        Ok(ev)
    }

    fn slices(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.grids.iter().chain(self.stationary.iter())
    }

    fn compute_curvature(&self) -> Result<f64> {
        let dom = self.dom;
        let nx = dom.nx;
        let mut m = 0.0f64;
        for grid in self.slices() {
            for (k, &g) in dom.interior.iter().enumerate() {
                if dom.dist[g] <= self.margin {
                    continue;
                }
                let c = transform(self.alpha, grid[g])?;
                if !dom.is_full_interior(k) {
                    continue;
                }
                for (a, b) in [(g + 1, g - 1), (g + nx, g - nx)] {
                    let va = transform(self.alpha, grid[a])?;
                    let vb = transform(self.alpha, grid[b])?;
                    m = m.max((va - 2.0 * c + vb).abs());
                }
            }
        }
        Ok(m / (dom.h * dom.h))
    }

    fn u_at(&self, x: Point, t: Time) -> Result<f64> {
        let interp = |grid: &Vec<f64>| self.dom.interpolate(grid, x).ok_or(Error::OutOfDomain);
        match t {
            Time::Infinity => interp(self.stationary.as_ref().ok_or(Error::OutOfDomain)?),
            Time::Finite(tau) => {
                let s = tau.max(0.0).powf(self.beta);
                let n = self.times.len();
                if n == 0 {
                    return Err(Error::OutOfDomain);
                }
                let tol = 1e-9 * (1.0 + self.times[n - 1]);
                if s < self.times[0] - tol || s > self.times[n - 1] + tol {
                    return Err(Error::OutOfDomain);
                }
                let k = self.times.partition_point(|&tk| tk <= s);
                if k == 0 {
                    return interp(&self.grids[0]);
                }
                if k >= n {
                    return interp(&self.grids[n - 1]);
                }
                let (ta, tb) = (self.times[k - 1], self.times[k]);
                let w = ((s - ta) / (tb - ta)).clamp(0.0, 1.0);
                let a = interp(&self.grids[k - 1])?;
                if w == 0.0 {
                    return Ok(a);
                }
                let b = interp(&self.grids[k])?;
                Ok((1.0 - w) * a + w * b)
            }
        }
    }
}

impl Evaluator for TransformedTrajectory<'_> {
    fn eval(&self, x: Point, t: Time) -> Result<f64> {
        if self.dom.spec.signed_distance(x) < 0.0 {
            return Err(Error::OutOfDomain);
        }
        transform(self.alpha, self.u_at(x, t)?)
    }

    fn spacing(&self) -> f64 {
        self.dom.h
    }

    fn nodes(&self) -> Vec<Point> {
        (0..self.dom.n_unknowns())
            .filter(|&k| self.dom.node_distance(k) > self.margin)
            .map(|k| self.dom.node(k))
            .collect()
    }

    fn times(&self) -> Vec<Time> {
        let mut out: Vec<Time> = self.times.iter().map(|s| Time::Finite(s.powf(1.0 / self.beta))).collect();
        if self.stationary.is_some() {
            out.push(Time::Infinity);
        }
        out
    }

    fn contains(&self, x: Point) -> bool {
        self.dom.spec.signed_distance(x) > self.margin
    }

    fn curvature_scale(&self) -> f64 {
        self.curvature
    }

    fn monotone(&self) -> bool {
        self.monotone
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_log_transforms() {
        assert_eq!(transform(1.0, 0.3).unwrap(), 0.3);
        assert!((transform(0.0, std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(transform(0.0, 0.0), Err(Error::NonpositiveValue(_))));
    }

    #[test]
    fn sqrt_of_disk_torsion() {
        let dom = DiscretizedDomain::build(DomainSpec::Disk { radius: 1.0 }, 1.0 / 16.0).unwrap();
        let vals: Vec<f64> = (0..dom.n_unknowns())
            .map(|k| {
                let p = dom.node(k);
                (1.0 - p[0] * p[0] - p[1] * p[1]) / 4.0
            })
            .collect();
        let ev = FieldEvaluator::from_field(&dom, &Field::new(vals, Time::Infinity), 0.5, 2.0 * dom.h).unwrap();
        let v = ev.eval([0.3, 0.0], Time::Infinity).unwrap();
        assert!((v - ((1.0 - 0.09) / 4.0f64).sqrt()).abs() < 1e-3);
        assert!(ev.eval([2.0, 0.0], Time::Infinity).is_err());
    }
}
