//! Time integration of `u_t − Δu = b(x,u,t)` with zero Dirichlet data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::DiscretizedDomain;
use crate::error::{Error, Result};
use crate::operators::{apply_neg_laplacian, solve_system, sup_norm, EigenPair, Field, Mass, SolverOptions, Time};
use crate::problem::{check_hypotheses, spow, InitialData, Problem, Source, NEGATIVE_TOL};
use crate::stationary::{solve_stationary, StationaryOptions, StationaryResult};

pub const BLOWUP_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// Start of integration (the seeding time, or zero).
    pub t0: f64,
    pub dt: f64,
    /// Steps between consecutive snapshots.
    pub substeps: usize,
    pub horizon: f64,
}

impl TimeGrid {
    /// `Δt` steps of 4 per snapshot, seeding at `min(10Δt, T/100)`.
    pub fn standard(dt: f64, horizon: f64) -> Self {
        TimeGrid { t0: (10.0 * dt).min(0.01 * horizon), dt, substeps: 4, horizon }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.substeps == 0 || !(self.horizon > self.t0) || self.t0 < 0.0 {
            return Err(Error::RangeViolation("time grid needs dt > 0, substeps ≥ 1, 0 ≤ t0 < T".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    pub stationary: Option<StationaryResult>,
    pub monotone: bool,
    pub tau_mono: f64,
    /// Max `|u(t_{k+1}) − u(t_k)|/(t_{k+1} − t_k)` per snapshot interval.
    pub max_time_derivative: Vec<f64>,
    /// Seeding time when the positive branch was selected by a subsolution.
    pub seeded_at: Option<f64>,
    pub h: f64,
}

impl Trajectory {
    pub fn field(&self, k: usize) -> Field {
        Field::new(self.fields[k].clone(), Time::Finite(self.times[k]))
    }

    pub fn last(&self) -> &[f64] {
        self.fields.last().expect("trajectory is never empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub field: Field,
    pub constant: f64,
    /// `max(w_t − Δ_h w − b(x,w,t0))`; nonpositive up to `1e−8` for a subsolution.
    pub worst_margin: f64,
    pub verified: bool,
}

/// `C = ((1−q)k/(1+γ))^{1/(1−q)}`.
pub fn subsolution_constant(k: f64, q: f64, gamma: f64) -> f64 {
    ((1.0 - q) * k / (1.0 + gamma)).powf(1.0 / (1.0 - q))
}

/// `w(·,t0) = C e^{−λ₁t0} t0^{(1+γ)/(1−q)} φ₁`, checked as a discrete subsolution.
pub fn seed_from_subsolution(problem: &Problem, dom: &DiscretizedDomain, t0: f64, eig: &EigenPair) -> Result<Seed> {
    let hyp = check_hypotheses(problem, 1.0);
    let (k, q) = match (hyp.h1.holds(), hyp.k, hyp.q) {
        (true, Some(k), Some(q)) => (k, q),
        _ => return Err(Error::HypothesisViolated("(H1) does not hold".into())),
    };
    let gamma = problem.weight.gamma;
    let c = subsolution_constant(k, q, gamma);
    let p = (1.0 + gamma) / (1.0 - q);
    let amp = c * (-eig.lambda * t0).exp() * spow(t0, p);
    let w: Vec<f64> = eig.phi.values.iter().map(|phi| amp * phi).collect();
    let mut worst = f64::NEG_INFINITY;
    if t0 > 0.0 {
        // −Δ_h φ₁ = λ₁φ₁, so w_t − Δ_h w = w·p/t0.
        for (kk, &wk) in w.iter().enumerate() {
            let lhs = wk * p / t0;
            worst = worst.max(lhs - problem.b(dom.node(kk), wk, t0));
        }
    } else {
        worst = 0.0;
    }
    Ok(Seed { field: Field::new(w, Time::Finite(t0)), constant: c, worst_margin: worst, verified: worst <= 1e-8 })
}

fn newton_corrected(problem: &Problem) -> bool {
    matches!(problem.source, Source::Logistic | Source::LogS)
}

/// One IMEX backward-Euler step from `t` to `t + Δt`.
///
/// Where `b(x,s) < 0` the absorption `s·(b/s)` is taken implicitly through
/// the mass term, so the step keeps the state nonnegative.
pub fn advance(problem: &Problem, dom: &DiscretizedDomain, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::RangeViolation("dt must be positive".into()));
    }
    if let Some(&bad) = u.iter().find(|&&v| v < -NEGATIVE_TOL) {
        return Err(Error::NegativeState(bad));
    }
    let t1 = t + dt;
    let nodes: Vec<_> = (0..u.len()).map(|k| dom.node(k)).collect();
    let (rhs, mass): (Vec<f64>, Vec<f64>) = u
        .par_iter()
        .zip(&nodes)
        .map(|(&s, &x)| {
            let s = s.max(0.0);
            let b = problem.b(x, s, t1);
            if b < 0.0 && s > 0.0 {
                (s, 1.0 - dt * b / s)
            } else {
                (s + dt * b, 1.0)
            }
        })
        .unzip();
    let opts = SolverOptions::default();
    let mut next = solve_system(dom, Mass::Diagonal(&mass), dt, &rhs, Some(u), &opts)?.solution;
    if newton_corrected(problem) {
        // One Newton step on F(v) = (I + ΔtA)v − u − Δt·b(v) from the IMEX value.
        let cap = 0.5 / dt;
        let mut av = vec![0.0; next.len()];
        apply_neg_laplacian(dom, &next, &mut av);
        let jac: Vec<f64> = next
            .iter()
            .zip(&nodes)
            .map(|(&s, &x)| 1.0 - dt * problem.db_ds(x, s.max(1e-300), t1).min(cap))
            .collect();
        let neg_f: Vec<f64> = (0..next.len())
            .map(|k| u[k] + dt * problem.b(nodes[k], next[k].max(0.0), t1) - next[k] - dt * av[k])
            .collect();
        if jac.iter().all(|&j| j > 0.0) {
            let delta = solve_system(dom, Mass::Diagonal(&jac), dt, &neg_f, None, &opts)?.solution;
            let corrected: Vec<f64> = next.iter().zip(&delta).map(|(v, d)| v + d).collect();
            // A correction that leaves the positive cone is discarded.
            if corrected.iter().all(|&v| v >= 0.0) {
                next = corrected;
            }
        }
    }
    for v in next.iter_mut() {
        if *v < 0.0 && *v >= -NEGATIVE_TOL {
            *v = 0.0;
        }
    }
    if let Some(&bad) = next.iter().find(|&&v| v < -NEGATIVE_TOL) {
        return Err(Error::NegativeState(bad));
    }
    let norm = sup_norm(&next);
    if !(norm <= BLOWUP_NORM) {
        return Err(Error::StateBlowup { time: t1, norm });
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Append the `t = ∞` slice from the stationary solver.
    pub stationary_slice: bool,
    /// Multiplier applied to the seed (values below one give a comparison sub-run).
    pub seed_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { stationary_slice: false, seed_scale: 1.0 }
    }
}

fn needs_seed(problem: &Problem) -> bool {
    match problem.u0 {
        InitialData::SubsolutionSeed => true,
        InitialData::Zero => matches!(
            problem.source,
            Source::PowerQ { q } if q > 0.0
        ) || matches!(problem.source, Source::PowerSum { .. }),
        _ => false,
    }
}

/// Integrates to the horizon and records snapshots every `grid.substeps` steps.
pub fn solve_trajectory(
    problem: &Problem,
    dom: &DiscretizedDomain,
    grid: &TimeGrid,
    eig: Option<&EigenPair>,
    opts: &RunOptions,
) -> Result<Trajectory> {
    problem.validate()?;
    grid.validate()?;
    let n = dom.n_unknowns();
    let need_eig = || eig.ok_or_else(|| Error::ValidityViolation("initial datum needs the eigenpair".into()));
    let mut times = Vec::new();
    let mut fields = Vec::new();
    let mut seeded_at = None;
    let (mut t, mut u) = if needs_seed(problem) {
        let seed = seed_from_subsolution(problem, dom, grid.t0, need_eig()?)?;
        times.push(0.0);
        fields.push(vec![0.0; n]);
        seeded_at = Some(grid.t0);
        let w: Vec<f64> = seed.field.values.iter().map(|v| v * opts.seed_scale).collect();
        (grid.t0, w)
    } else {
        let u0 = match &problem.u0 {
            InitialData::Zero | InitialData::SubsolutionSeed => vec![0.0; n],
            InitialData::Eigenfunction { scale } => need_eig()?.phi.values.iter().map(|v| scale * v).collect(),
            InitialData::Samples { values } => {
                if values.len() != n {
                    return Err(Error::ValidityViolation(format!(
                        "initial samples have length {}, expected {n}",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        (0.0, u0)
    };
    times.push(t);
    fields.push(u.clone());
    let tau_mono = 10.0 * dom.h * dom.h;
    let mut monotone = true;
    let mut max_dt = Vec::new();
    let eps = 1e-12 * grid.horizon;
    while t < grid.horizon - eps {
        let t_start = t;
        let start = u.clone();
        for _ in 0..grid.substeps {
            if t >= grid.horizon - eps {
                break;
            }
            let step = grid.dt.min(grid.horizon - t);
            u = advance(problem, dom, &u, t, step)?;
            t += step;
        }
        let gap = t - t_start;
        let mut worst_drop: f64 = 0.0;
        let mut rate: f64 = 0.0;
        for (a, b) in u.iter().zip(&start) {
            worst_drop = worst_drop.max(b - a);
            rate = rate.max((a - b).abs() / gap);
        }
        if worst_drop > tau_mono {
            monotone = false;
        }
        max_dt.push(rate);
        times.push(t);
        fields.push(u.clone());
    }
    let stationary = if opts.stationary_slice {
        let mut sp = problem.clone();
        if sp.weight.gamma > 0.0 {
            sp.truncate = true;
        }
        Some(solve_stationary(&sp, dom, &StationaryOptions::default())?)
    } else {
        None
    };
    Ok(Trajectory { times, fields, stationary, monotone, tau_mono, max_time_derivative: max_dt, seeded_at, h: dom.h })
}

/// `min(main − sub)` over all nodes and shared snapshots.
pub fn comparison_margin(main: &Trajectory, sub: &Trajectory) -> f64 {
    let mut worst = f64::INFINITY;
    for (a, b) in main.fields.iter().zip(&sub.fields) {
        for (x, y) in a.iter().zip(b) {
            worst = worst.min(x - y);
        }
    }
    worst
}

/// `min u_k/d_k` over interior nodes adjacent to the boundary.
pub fn hopf_quotient(dom: &DiscretizedDomain, u: &[f64]) -> f64 {
    (0..dom.n_unknowns())
        .filter(|&k| !dom.is_full_interior(k))
        .map(|k| u[k] / dom.node_distance(k))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::operators::principal_eigenpair;
    use crate::problem::Weight;
    use std::f64::consts::PI;

    fn square(h: f64) -> DiscretizedDomain {
        DiscretizedDomain::build(DomainSpec::UnitSquare, h).unwrap()
    }

    #[test]
    fn seed_constants() {
        assert_eq!(subsolution_constant(1.0, 0.0, 0.0), 1.0);
        assert_eq!(subsolution_constant(1.0, 0.5, 0.0), 0.25);
        let dom = square(1.0 / 32.0);
        let eig = principal_eigenpair(&dom).unwrap();
        let p = Problem::new(DomainSpec::UnitSquare, Weight::constant(1.0), Source::One, 1.0);
        let s = seed_from_subsolution(&p, &dom, 0.01, &eig).unwrap();
        let c = (0..dom.n_unknowns()).find(|&k| dom.node(k) == [0.5, 0.5]).unwrap();
        // Oracle with λ₁ = 2π²: e^{−0.19739}·0.01.
        let oracle = (-2.0 * PI * PI * 0.01).exp() * 0.01;
        assert!((oracle - 8.21e-3).abs() < 1e-5);
        assert!((s.field.values[c] - oracle).abs() < 1e-5);
        assert!(s.verified);
        let z = seed_from_subsolution(&p, &dom, 0.0, &eig).unwrap();
        assert!(z.field.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn seeding_rejects_linear_sources() {
        let dom = square(1.0 / 8.0);
        let eig = principal_eigenpair(&dom).unwrap();
        let p = Problem::new(DomainSpec::UnitSquare, Weight::constant(1.0), Source::Identity, 1.0);
        assert!(matches!(seed_from_subsolution(&p, &dom, 0.01, &eig), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn heat_step_contracts_the_sine_mode() {
        let dom = square(1.0 / 32.0);
        let p = Problem::new(DomainSpec::UnitSquare, Weight::constant(0.0), Source::Identity, 1.0);
        let u: Vec<f64> = (0..dom.n_unknowns())
            .map(|k| {
                let x = dom.node(k);
                (PI * x[0]).sin() * (PI * x[1]).sin()
            })
            .collect();
        let dt = 0.01;
        let next = advance(&p, &dom, &u, 0.0, dt).unwrap();
        let ratio = sup_norm(&next) / sup_norm(&u);
        assert!((ratio - 1.0 / (1.0 + 2.0 * PI * PI * dt)).abs() < 2e-3, "{ratio}");
        assert!(sup_norm(&next) <= sup_norm(&u));
    }

    #[test]
    fn torsion_first_step() {
        let dom = square(1.0 / 64.0);
        let p = Problem::new(DomainSpec::UnitSquare, Weight::constant(1.0), Source::One, 1.0);
        let dt = 1e-4;
        let next = advance(&p, &dom, &vec![0.0; dom.n_unknowns()], 0.0, dt).unwrap();
        let c = (0..dom.n_unknowns()).find(|&k| dom.node(k) == [0.5, 0.5]).unwrap();
        assert!((next[c] - dt).abs() < 1e-9);
    }

    #[test]
    fn heat_trajectory_matches_exponential_decay() {
        let dom = square(1.0 / 32.0);
        let mut p = Problem::new(DomainSpec::UnitSquare, Weight::constant(0.0), Source::Identity, 0.05);
        let eig = principal_eigenpair(&dom).unwrap();
        p.u0 = InitialData::Eigenfunction { scale: 1.0 };
        let grid = TimeGrid { t0: 0.0, dt: 1e-3, substeps: 5, horizon: 0.05 };
        let tr = solve_trajectory(&p, &dom, &grid, Some(&eig), &RunOptions::default()).unwrap();
        let peak = sup_norm(tr.last());
        assert!((tr.times.last().unwrap() - 0.05).abs() < 1e-12);
        assert!((peak - (-2.0 * PI * PI * 0.05f64).exp()).abs() < 0.01, "{peak}");
    }

    #[test]
    fn lane_emden_is_monotone() {
        let dom = square(1.0 / 16.0);
        let eig = principal_eigenpair(&dom).unwrap();
        let p = Problem::new(DomainSpec::UnitSquare, Weight::constant(1.0), Source::PowerQ { q: 0.5 }, 1.0);
        let grid = TimeGrid::standard(1.0 / 16.0, 1.0);
        let tr = solve_trajectory(&p, &dom, &grid, Some(&eig), &RunOptions::default()).unwrap();
        assert!(tr.monotone);
        assert_eq!(tr.seeded_at, Some(grid.t0));
        assert!(hopf_quotient(&dom, tr.last()) > 0.0);
    }

    #[test]
    fn blowup_is_reported() {
        let spec = DomainSpec::Rectangle { width: 4.0, height: 4.0 };
        let dom = DiscretizedDomain::build(spec.clone(), 0.5).unwrap();
        let mut p = Problem::new(spec, Weight::constant(1.0), Source::LogS, 10.0);
        let bump = (0..dom.n_unknowns()).map(|k| 1e5 * dom.node_distance(k) / 2.0).collect();
        p.u0 = InitialData::Samples { values: bump };
        let grid = TimeGrid { t0: 0.0, dt: 0.05, substeps: 1, horizon: 10.0 };
        let err = solve_trajectory(&p, &dom, &grid, None, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, Error::StateBlowup { .. }), "{err:?}");
    }
}
