//! Stationary problem `−Δv = b(x,v,∞)` with zero Dirichlet data.

use serde::{Deserialize, Serialize};

use crate::domain::DiscretizedDomain;
use crate::error::{Error, Result};
use crate::operators::{apply_neg_laplacian, solve_poisson, sup_norm, Field, Time};
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryResult {
    pub v: Field,
    /// `‖(−Δ_h)v − b(·,v,∞)‖_∞`.
    pub residual: f64,
    pub iterations: usize,
    pub sup_norm: f64,
    /// Set when `s ↦ b(x,s)/s` failed the sampled strict-decrease test.
    pub nonunique_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions { damping: 0.5, tol: 1e-10, max_iter: 10_000 }
    }
}

fn source_values(problem: &Problem, dom: &DiscretizedDomain, v: &[f64], t: f64) -> Vec<f64> {
    (0..dom.n_unknowns()).map(|k| problem.b(dom.node(k), v[k].max(0.0), t)).collect()
}

fn residual(problem: &Problem, dom: &DiscretizedDomain, v: &[f64], t: f64) -> (f64, f64) {
    let mut lap = vec![0.0; v.len()];
    apply_neg_laplacian(dom, v, &mut lap);
    let b = source_values(problem, dom, v, t);
    let r = lap.iter().zip(&b).fold(0.0f64, |m, (l, s)| m.max((l - s).abs()));
    (r, sup_norm(&b))
}

fn strictly_decreasing_ratio(problem: &Problem, dom: &DiscretizedDomain, t: f64) -> bool {
    let states: Vec<f64> = (0..64).map(|i| 10f64.powf(-6.0 + 7.0 * i as f64 / 63.0)).collect();
    let stride = (dom.n_unknowns() / 50).max(1);
    (0..dom.n_unknowns()).step_by(stride).all(|k| {
        let x = dom.node(k);
        states.windows(2).all(|w| problem.b(x, w[1], t) / w[1] < problem.b(x, w[0], t) / w[0])
    })
}

/// Solves the stationary problem at `t = problem.stationary_time()`.
pub fn solve_stationary(problem: &Problem, dom: &DiscretizedDomain, opts: &StationaryOptions) -> Result<StationaryResult> {
    let t = problem.stationary_time();
    if !t.is_finite() {
        return Err(Error::RangeViolation(
            "the weight grows in time; enable truncation for a stationary slice".into(),
        ));
    }
    let n = dom.n_unknowns();
    if problem.source.is_state_independent() {
        let rhs = source_values(problem, dom, &vec![0.0; n], t);
        let out = solve_poisson(dom, &rhs, None, 1e-13)?;
        let (res, _) = residual(problem, dom, &out.solution, t);
        let s = sup_norm(&out.solution);
        return Ok(StationaryResult {
            v: Field::new(out.solution, Time::Infinity),
            residual: res,
            iterations: 1,
            sup_norm: s,
            nonunique_warning: false,
        });
    }

    // Start from a scaled torsion supersolution: −Δ(cz) = c ≥ b(x, c‖z‖).
    let z = solve_poisson(dom, &vec![1.0; n], None, 1e-13)?.solution;
    let zmax = sup_norm(&z);
    let mut c = 1.0;
    for _ in 0..200 {
        let bmax = (0..n).step_by(1).fold(0.0f64, |m, k| m.max(problem.b(dom.node(k), c * zmax, t)));
        if c >= bmax {
            break;
        }
        c *= 2.0;
    }
    let mut v: Vec<f64> = z.iter().map(|zi| c * zi).collect();
    let mut g_prev: Option<Vec<f64>> = None;
    let d = opts.damping;
    for it in 1..=opts.max_iter {
        let rhs = source_values(problem, dom, &v, t);
        let g = solve_poisson(dom, &rhs, g_prev.as_deref(), 1e-13)?.solution;
        let next: Vec<f64> = v.iter().zip(&g).map(|(a, b)| (1.0 - d) * a + d * b).collect();
        let change = next.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        g_prev = Some(g);
        if change <= opts.tol {
            let (res, _) = residual(problem, dom, &v, t);
            let s = sup_norm(&v);
            return Ok(StationaryResult {
                v: Field::new(v, Time::Infinity),
                residual: res,
                iterations: it,
                sup_norm: s,
                nonunique_warning: !strictly_decreasing_ratio(problem, dom, t),
            });
        }
        if it == opts.max_iter {
            return Err(Error::NoConvergence { iterations: it, change });
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::problem::{Source, Weight};

    #[test]
    fn disk_torsion_center() {
        let dom = DiscretizedDomain::build(DomainSpec::Disk { radius: 1.0 }, 1.0 / 32.0).unwrap();
        let p = Problem::new(dom.spec.clone(), Weight::constant(1.0), Source::One, 1.0);
        let r = solve_stationary(&p, &dom, &StationaryOptions::default()).unwrap();
        let c = (0..dom.n_unknowns()).find(|&k| dom.node(k) == [0.0, 0.0]).unwrap();
        // Exact radial solution (1 − |x|²)/4.
        assert!((r.v.values[c] - 0.25).abs() < 1e-3, "{}", r.v.values[c]);
    }

    fn square_torsion_fourier(x: f64, y: f64) -> f64 {
        use std::f64::consts::PI;
        let mut sum = 0.0;
        for m in (1..400).step_by(2) {
            for n in (1..400).step_by(2) {
                let (mf, nf) = (m as f64, n as f64);
                sum += 16.0 / (PI.powi(4) * mf * nf * (mf * mf + nf * nf))
                    * (mf * PI * x).sin()
                    * (nf * PI * y).sin();
            }
        }
        sum
    }

    #[test]
    fn square_torsion_center_matches_fourier_series() {
        let oracle = square_torsion_fourier(0.5, 0.5);
        assert!((oracle - 0.0737).abs() < 1e-4, "{oracle}");
        let dom = DiscretizedDomain::build(DomainSpec::UnitSquare, 1.0 / 32.0).unwrap();
        let p = Problem::new(dom.spec.clone(), Weight::constant(1.0), Source::One, 1.0);
        let r = solve_stationary(&p, &dom, &StationaryOptions::default()).unwrap();
        let c = (0..dom.n_unknowns()).find(|&k| dom.node(k) == [0.5, 0.5]).unwrap();
        assert!((r.v.values[c] - oracle).abs() < 2e-4, "{} vs {oracle}", r.v.values[c]);
    }

    #[test]
    fn torsion_is_linear_in_the_weight() {
        let dom = DiscretizedDomain::build(DomainSpec::UnitSquare, 1.0 / 16.0).unwrap();
        let p1 = Problem::new(dom.spec.clone(), Weight::constant(1.0), Source::One, 1.0);
        let p2 = Problem::new(dom.spec.clone(), Weight::constant(2.0), Source::One, 1.0);
        let v1 = solve_stationary(&p1, &dom, &StationaryOptions::default()).unwrap().v.values;
        let v2 = solve_stationary(&p2, &dom, &StationaryOptions::default()).unwrap().v.values;
        for (a, b) in v1.iter().zip(&v2) {
            assert!((2.0 * a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn lane_emden_contract() {
        let dom = DiscretizedDomain::build(DomainSpec::UnitSquare, 1.0 / 32.0).unwrap();
        let p = Problem::new(dom.spec.clone(), Weight::constant(1.0), Source::PowerQ { q: 0.5 }, 1.0);
        let r = solve_stationary(&p, &dom, &StationaryOptions::default()).unwrap();
        assert!(r.v.values.iter().all(|&v| v > 0.0));
        assert!(r.residual <= 1e-8 * (1.0 + r.sup_norm.sqrt()), "{}", r.residual);
        assert!(!r.nonunique_warning);
    }

    #[test]
    fn growing_weight_needs_truncation() {
        let dom = DiscretizedDomain::build(DomainSpec::UnitSquare, 1.0 / 8.0).unwrap();
        let mut w = Weight::constant(1.0);
        w.gamma = 0.5;
        let mut p = Problem::new(dom.spec.clone(), w, Source::One, 1.0);
        assert!(solve_stationary(&p, &dom, &StationaryOptions::default()).is_err());
        p.truncate = true;
        assert!(solve_stationary(&p, &dom, &StationaryOptions::default()).is_ok());
    }
}
