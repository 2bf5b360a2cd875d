//! Scenario catalog and the solve → transform → audit → bound pipeline.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{min_defect, power_transform, DefectReport, FieldEvaluator, FnEvaluator, Mode, SamplerConfig, Tuple5};
use crate::bounds::{
    alpha_exponent, alpha_window, boundary_constant, log_concavity_rhs, quantitative_rhs, BoundParams, BoundReport,
    ExponentVariant, LogVariant, QuantitativeMode,
};
use crate::domain::{DiscretizedDomain, DomainSpec};
use crate::error::{Error, Result};
use crate::operators::{principal_eigenpair, sup_norm, EigenPair};
use crate::parabolic::{comparison_margin, hopf_quotient, solve_trajectory, RunOptions, TimeGrid, Trajectory};
use crate::problem::{check_hypotheses, sup_slope_lambda, InitialData, Problem, Profile, Source, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: f64,
    /// Defaults to `h`.
    pub dt: Option<f64>,
    pub horizon: f64,
    pub substeps: usize,
}

impl GridSpec {
    pub fn new(h: f64) -> Self {
        GridSpec { h, dt: None, horizon: 2.0, substeps: 4 }
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(self.h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::RangeViolation(format!("h must be positive, got {}", self.h)));
        }
        if !(self.dt() > 0.0) {
            return Err(Error::RangeViolation(format!("dt must be positive, got {}", self.dt())));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::RangeViolation(format!("T must be positive, got {}", self.horizon)));
        }
        Ok(())
    }
}

/// Which transformed field is audited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuditSpec {
    /// `C` of `u^α(·,⋆^β)` including the stationary slice.
    Spacetime { alpha: f64, beta: f64 },
    /// `C*` of `log u(·,t)` at every audited snapshot.
    PerTimeLog,
}

/// Quantitative right-hand sides compared against the measured defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantitativeCheck {
    /// `−T e^{1+ΛT} sup (C*_a)⁻`.
    LogWeight,
    /// Oscillation, rough, θ = 1 and gradient bounds for `a(x)u^q`.
    PowerWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub problem: Problem,
    pub audit: AuditSpec,
    pub grid: GridSpec,
    /// Upper end of the exponent window near the parabolic boundary.
    pub alpha_cap: Option<f64>,
    pub quantitative: Option<QuantitativeCheck>,
    /// Inner-region depth for weight statistics; `None` uses the argmin pair's distance to the boundary.
    pub rho: Option<f64>,
    pub check_monotone: bool,
    pub check_comparison: bool,
    pub check_barrier: bool,
    pub check_hopf: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub verdict: Verdict,
    /// Signed slack; negative on failure.
    pub margin: f64,
    pub tuple: Option<Tuple5>,
    pub note: Option<String>,
}

impl Assertion {
    fn from_margin(name: &str, margin: f64, tuple: Option<Tuple5>) -> Self {
        let verdict = if margin >= 0.0 { Verdict::Pass } else { Verdict::Fail };
        Assertion { name: name.into(), verdict, margin, tuple, note: None }
    }

    fn not_applicable(name: &str, note: String) -> Self {
        Assertion { name: name.into(), verdict: Verdict::NotApplicable, margin: 0.0, tuple: None, note: Some(note) }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub monotone: bool,
    pub stationary_residual: Option<f64>,
    pub stationary_sup: Option<f64>,
    pub hopf_min: Option<f64>,
    pub barrier_margin: Option<f64>,
    pub comparison_margin: Option<f64>,
    pub snapshots: usize,
    pub unknowns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub verdict: Verdict,
    pub assertions: Vec<Assertion>,
    pub defects: Vec<DefectReport>,
    pub bounds: Vec<BoundReport>,
    pub diagnostics: Diagnostics,
    /// Wall time; left out of the JSON so reports stay byte-identical.
    #[serde(skip)]
    pub runtime_ms: u128,
}

impl VerificationReport {
    fn finish(mut self) -> Self {
        self.verdict = if self.assertions.iter().any(|a| a.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if self.assertions.iter().all(|a| a.verdict == Verdict::NotApplicable) {
            Verdict::NotApplicable
        } else {
            Verdict::Pass
        };
        self
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    /// Most negative defect among the audits, zero when none is negative.
    pub fn worst_defect(&self) -> f64 {
        self.defects.iter().map(|d| d.min).fold(0.0, f64::min)
    }
}

fn constant_weight() -> Weight {
    Weight::constant(1.0)
}

fn profile_weight(profile: Profile, theta: Option<f64>) -> Weight {
    Weight { profile, gamma: 0.0, theta }
}

fn bump(epsilon: f64, center: [f64; 2]) -> Profile {
    Profile::RampBump { epsilon, center, width: 0.15 }
}

const DISK: DomainSpec = DomainSpec::Disk { radius: 1.0 };

fn base(id: &str, domain: DomainSpec, weight: Weight, source: Source, audit: AuditSpec, h: f64) -> Scenario {
    Scenario {
        id: id.into(),
        problem: Problem::new(domain, weight, source, 2.0),
        audit,
        grid: GridSpec::new(h),
        alpha_cap: None,
        quantitative: None,
        rho: None,
        check_monotone: false,
        check_comparison: false,
        check_barrier: false,
        check_hopf: false,
    }
}

fn log_scenario(id: &str, weight: Weight, source: Source, h: f64) -> Scenario {
    let mut s = base(id, DISK, weight, source, AuditSpec::PerTimeLog, h);
    s.problem.u0 = InitialData::Eigenfunction { scale: 1.0 };
    s
}

fn power_scenario(id: &str, domain: DomainSpec, weight: Weight, source: Source, alpha: f64, beta: f64, h: f64) -> Scenario {
    let mut s = base(id, domain, weight, source, AuditSpec::Spacetime { alpha, beta }, h);
    s.problem.beta = beta;
    s.check_monotone = true;
    s.check_hopf = true;
    s
}

/// Perturbation sizes of the ramp-bump family.
pub const RAMP_EPSILONS: [f64; 4] = [0.0, 0.05, 0.1, 0.2];

fn eps_tag(e: f64) -> String {
    format!("{e}")
}

/// Every catalog scenario at spacing `h`.
pub fn catalog(h: f64) -> Vec<Scenario> {
    let inf = f64::INFINITY;
    let mut out = Vec::new();

    let a = alpha_exponent(0.0, 0.0, 2.0, inf, ExponentVariant::ConstantWeight).expect("valid parameters");
    let mut s = power_scenario("torsion-square", DomainSpec::UnitSquare, constant_weight(), Source::One, a, 2.0, h);
    s.alpha_cap = Some(alpha_window(0.0, 0.0, 2.0));
    s.check_barrier = true;
    out.push(s);

    let a = alpha_exponent(0.5, 0.0, 1.0, inf, ExponentVariant::LaneEmden).expect("valid parameters");
    let mut s = power_scenario("lane-emden", DomainSpec::UnitSquare, constant_weight(), Source::PowerQ { q: 0.5 }, a, 1.0, h);
    s.alpha_cap = Some(alpha_window(0.5, 0.0, 1.0));
    s.check_barrier = true;
    s.check_comparison = true;
    out.push(s);

    let concave = Profile::Paraboloid { peak: 1.0, curvature: 1.0, center: [0.0, 0.0] };
    out.push(log_scenario("eigen", profile_weight(concave, Some(1.0)), Source::Identity, h));
    out.push(log_scenario("saturable", constant_weight(), Source::Saturable, h));
    let habitat = Profile::Paraboloid { peak: 8.0, curvature: 12.0, center: [0.0, 0.0] };
    out.push(log_scenario("logistic", profile_weight(habitat, Some(1.0)), Source::Logistic, h));
    let mut s = log_scenario("log", constant_weight(), Source::LogS, h);
    s.quantitative = Some(QuantitativeCheck::LogWeight);
    out.push(s);

    let a = (1.0 - 0.6) / 2.0;
    let mut s = power_scenario(
        "sum-of-powers",
        DomainSpec::UnitSquare,
        constant_weight(),
        Source::PowerSum { p: 0.5, q: 0.6 },
        a,
        2.0,
        h,
    );
    s.alpha_cap = Some(alpha_window(0.5, 0.0, 2.0));
    s.check_comparison = true;
    out.push(s);

    let mut s = power_scenario("one-minus-s", DomainSpec::UnitSquare, constant_weight(), Source::OneMinusSP { p: 0.5 }, 0.5, 2.0, h);
    s.alpha_cap = Some(alpha_window(0.0, 0.0, 2.0));
    out.push(s);

    let a = alpha_exponent(0.0, 0.0, 2.0, 1.0, ExponentVariant::Torsion).expect("valid parameters");
    let dist = profile_weight(Profile::DistancePower { scale: 1.0, omega: 1.0 }, Some(1.0));
    let mut s = power_scenario("torsion-distance", DomainSpec::UnitSquare, dist, Source::One, a, 2.0, h);
    s.alpha_cap = Some(1.0 / (2.0 + 1.0));
    out.push(s);

    for e in RAMP_EPSILONS {
        let w = profile_weight(bump(e, [0.3, 0.0]), None);
        let mut s = log_scenario(&format!("ramp-bump-log-eps{}", eps_tag(e)), w, Source::Identity, h);
        s.quantitative = Some(QuantitativeCheck::LogWeight);
        out.push(s);
    }
    for e in RAMP_EPSILONS {
        let w = profile_weight(bump(e, [0.5, 0.5]), None);
        let q = 0.5;
        let mut s = power_scenario(
            &format!("ramp-bump-le-eps{}", eps_tag(e)),
            DomainSpec::UnitSquare,
            w,
            Source::PowerQ { q },
            (1.0 - q) / 2.0,
            1.0,
            h,
        );
        s.alpha_cap = Some(alpha_window(q, 0.0, 1.0));
        s.quantitative = Some(QuantitativeCheck::PowerWeight);
        s.check_hopf = false;
        out.push(s);
    }
    out
}

pub fn scenario(id: &str, h: f64) -> Option<Scenario> {
    catalog(h).into_iter().find(|s| s.id == id)
}

pub fn scenario_ids() -> Vec<String> {
    catalog(0.1).into_iter().map(|s| s.id).collect()
}

fn sampler() -> SamplerConfig {
    SamplerConfig::default()
}

/// Snapshot indices audited per time: up to nine spread over `(0, T]`.
fn audit_snapshots(traj: &Trajectory) -> Vec<usize> {
    let pos: Vec<usize> = (0..traj.times.len()).filter(|&k| traj.times[k] > 0.0).collect();
    if pos.len() <= 9 {
        return pos;
    }
    let mut out: Vec<usize> = (0..9).map(|i| pos[i * (pos.len() - 1) / 8]).collect();
    out.dedup();
    out
}

/// `sup (C*_{a^θ})⁻` over nodes of `Ω_ρ` for a time-independent weight.
fn weight_defect(weight: &Weight, spec: &DomainSpec, h: f64, rho: f64, theta: f64) -> Result<(f64, f64)> {
    let w = weight.clone();
    let sp = spec.clone();
    let ev = FnEvaluator::on_domain(spec.clone(), h.max(1.0 / 64.0), move |x, _| w.profile.eval(&sp, x).powf(theta))
        .with_margin(rho);
    let r = min_defect(&ev, Mode::Space, &sampler())?;
    Ok(((-r.min).max(0.0), r.min))
}

fn weight_range(weight: &Weight, dom: &DiscretizedDomain, rho: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..dom.n_unknowns() {
        if dom.node_distance(k) >= rho {
            let v = weight.profile.eval(&dom.spec, dom.node(k));
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// Runs the full pipeline for one scenario.
pub fn run_scenario(s: &Scenario) -> Result<VerificationReport> {
    let start = Instant::now();
    s.grid.validate()?;
    let problem = &s.problem;
    problem.validate()?;
    let dom = DiscretizedDomain::build(problem.domain.clone(), s.grid.h)?;
    let eig = principal_eigenpair(&dom)?;
    let h = dom.h;
    let dt = s.grid.dt();
    let tg = TimeGrid { t0: (10.0 * dt).min(0.01 * s.grid.horizon), dt, substeps: s.grid.substeps.max(1), horizon: s.grid.horizon };
    let mut problem = problem.clone();
    problem.horizon = s.grid.horizon;
    let spacetime = matches!(s.audit, AuditSpec::Spacetime { .. });
    let traj = solve_trajectory(&problem, &dom, &tg, Some(&eig), &RunOptions { stationary_slice: spacetime, seed_scale: 1.0 })?;

    let mut report = VerificationReport {
        scenario: s.id.clone(),
        verdict: Verdict::Pass,
        assertions: Vec::new(),
        defects: Vec::new(),
        bounds: Vec::new(),
        diagnostics: Diagnostics {
            monotone: traj.monotone,
            stationary_residual: traj.stationary.as_ref().map(|r| r.residual),
            stationary_sup: traj.stationary.as_ref().map(|r| r.sup_norm),
            snapshots: traj.times.len(),
            unknowns: dom.n_unknowns(),
            ..Diagnostics::default()
        },
        runtime_ms: 0,
    };

    let margin = 2.0 * h;
    match s.audit {
        AuditSpec::Spacetime { alpha, beta } => {
            let cap = s.alpha_cap.unwrap_or(1.0);
            if alpha > cap + 1e-12 {
                report.assertions.push(Assertion::not_applicable(
                    "concavity",
                    format!("α = {alpha} lies outside the admissible window (0, {cap}]"),
                ));
            } else {
                let ev = power_transform(&dom, &traj, alpha, beta, margin)?;
                let d = min_defect(&ev, Mode::Spacetime, &sampler())?;
                let (wm, wmax) = s.problem.weight.profile_bounds(&dom);
                if s.quantitative.is_none() || wm == wmax {
                    report.assertions.push(Assertion::from_margin("concavity", d.min + d.tau_audit, Some(d.argmin)));
                }
                if s.quantitative == Some(QuantitativeCheck::PowerWeight) {
                    power_weight_checks(s, &dom, &traj, &d, &mut report)?;
                }
                report.defects.push(d);
            }
        }
        AuditSpec::PerTimeLog => {
            let slope = sup_slope_lambda(&problem.source)?;
            let rhs = match s.quantitative {
                Some(QuantitativeCheck::LogWeight) => {
                    let (sup_neg, _) = weight_defect(&problem.weight, &problem.domain, h, margin, 1.0)?;
                    let variant = if slope == 0.0 { LogVariant::Eigen } else { LogVariant::General };
                    Some(log_concavity_rhs(s.grid.horizon, slope, sup_neg, variant))
                }
                _ => None,
            };
            let mut worst_exact = f64::INFINITY;
            let mut worst_tuple = None;
            let mut worst_bound = f64::INFINITY;
            for k in audit_snapshots(&traj) {
                let ev = FieldEvaluator::from_field(&dom, &traj.field(k), 0.0, margin)?;
                let d = min_defect(&ev, Mode::Space, &sampler())?;
                if d.min + d.tau_audit < worst_exact {
                    worst_exact = d.min + d.tau_audit;
                    worst_tuple = Some(d.argmin);
                }
                if let Some(r) = rhs {
                    worst_bound = worst_bound.min(d.min - (r - d.tau_audit));
                }
                report.defects.push(d);
            }
            let concave_weight = weight_defect(&problem.weight, &problem.domain, h, margin, 1.0)?.0 == 0.0;
            if concave_weight {
                report.assertions.push(Assertion::from_margin("log_concavity", worst_exact, worst_tuple));
            }
            if let Some(r) = rhs {
                report.assertions.push(Assertion::from_margin("log_bound", worst_bound, worst_tuple));
                report.assertions.last_mut().expect("just pushed").note = Some(format!("rhs = {r:e}"));
            }
        }
    }

    if s.check_monotone {
        let m = if traj.monotone { 0.0 } else { -1.0 };
        report.assertions.push(Assertion::from_margin("monotone", m, None));
    }
    if s.check_hopf {
        let q = traj
            .times
            .iter()
            .zip(&traj.fields)
            .filter(|(t, _)| **t >= 0.1)
            .map(|(_, u)| hopf_quotient(&dom, u))
            .fold(f64::INFINITY, f64::min);
        report.diagnostics.hopf_min = Some(q);
        report.assertions.push(Assertion::from_margin("hopf", if q > 0.0 { q } else { -1.0 }, None));
    }
    if s.check_barrier {
        let m = barrier_margin(&problem, &traj, &eig)?;
        report.diagnostics.barrier_margin = Some(m);
        report.assertions.push(Assertion::from_margin("boundary_barrier", m, None));
    }
    if s.check_comparison {
        let sub = solve_trajectory(&problem, &dom, &tg, Some(&eig), &RunOptions { stationary_slice: false, seed_scale: 0.5 })?;
        let m = comparison_margin(&traj, &sub);
        report.diagnostics.comparison_margin = Some(m);
        report.assertions.push(Assertion::from_margin("comparison", m + 1e-12, None));
    }
    report.runtime_ms = start.elapsed().as_millis();
    Ok(report.finish())
}

/// `min(u − 0.99·C e^{−λ₁t} t^{(1+γ)/(1−q)} φ₁)` over nodes and snapshots in `(0,T)`.
pub fn barrier_margin(problem: &Problem, traj: &Trajectory, eig: &EigenPair) -> Result<f64> {
    let m_sup = traj.fields.iter().map(|f| sup_norm(f)).fold(1.0, f64::max);
    let hyp = check_hypotheses(problem, m_sup);
    let (k, q) = match (hyp.k, hyp.q) {
        (Some(k), Some(q)) if hyp.h1.holds() => (k, q),
        _ => return Err(Error::HypothesisViolated("growth near zero is not certified".into())),
    };
    let g = problem.weight.gamma;
    let c = boundary_constant(k, q, g);
    let e = (1.0 + g) / (1.0 - q);
    let mut worst = f64::INFINITY;
    for (t, u) in traj.times.iter().zip(&traj.fields) {
        if *t <= 0.0 || *t >= problem.horizon {
            continue;
        }
        let w = c * (-eig.lambda * t).exp() * t.powf(e);
        for (uk, pk) in u.iter().zip(&eig.phi.values) {
            worst = worst.min(uk - 0.99 * w * pk);
        }
    }
    Ok(worst)
}

fn power_weight_checks(
    s: &Scenario,
    dom: &DiscretizedDomain,
    traj: &Trajectory,
    d: &DefectReport,
    report: &mut VerificationReport,
) -> Result<()> {
    let q = match s.problem.source {
        Source::PowerQ { q } => q,
        Source::One => 0.0,
        _ => return Err(Error::ValidityViolation("power-weight bounds need a(x)u^q".into())),
    };
    let h = dom.h;
    let weight = &s.problem.weight;
    let (m, big_m) = weight.profile_bounds(dom);
    let u_inf = traj.stationary.as_ref().map(|r| r.sup_norm).ok_or(Error::ValidityViolation("missing stationary slice".into()))?;
    let rho = match s.rho {
        Some(r) => r,
        None => dom.spec.signed_distance(d.argmin.x1).min(dom.spec.signed_distance(d.argmin.x3)).max(2.0 * h),
    };
    let (sup_neg_a, inf_c_a) = weight_defect(weight, &dom.spec, h, rho, 1.0)?;
    let (a_min_rho, a_max_rho) = weight_range(weight, dom, rho);
    let params = BoundParams {
        q,
        beta: 1.0,
        theta: 1.0,
        m,
        big_m,
        rho,
        horizon: s.grid.horizon,
        sup_norm_u_inf: u_inf,
        osc_a: big_m - m,
        osc_a2: big_m * big_m - m * m,
        sup_neg_defect_a_theta: sup_neg_a,
        inf_c_a,
        a_min_rho,
        a_max_rho,
        xi: d.average_gradient(),
        xi_mismatch: d.gradient_mismatch,
        ..BoundParams::default()
    };
    for mode in [QuantitativeMode::Oscillation, QuantitativeMode::Rough, QuantitativeMode::Gradient] {
        match quantitative_rhs(&params, mode) {
            Ok(b) => {
                let name = format!("bound_{}", mode_name(mode));
                report.assertions.push(Assertion::from_margin(&name, d.min - (b.rhs - d.tau_audit), Some(d.argmin)));
                report.bounds.push(b);
            }
            Err(e) => report.assertions.push(Assertion::not_applicable(&format!("bound_{}", mode_name(mode)), e.to_string())),
        }
    }
    // θ = 1: audit u^{(1−q)/3}.
    match quantitative_rhs(&params, QuantitativeMode::Theta) {
        Ok(b) => {
            let ev3 = power_transform(dom, traj, b.alpha, 1.0, 2.0 * h)?;
            let d3 = min_defect(&ev3, Mode::Spacetime, &sampler())?;
            report.assertions.push(Assertion::from_margin("bound_theta", d3.min - (b.rhs - d3.tau_audit), Some(d3.argmin)));
            report.bounds.push(b);
            report.defects.push(d3);
        }
        Err(e) => report.assertions.push(Assertion::not_applicable("bound_theta", e.to_string())),
    }
    Ok(())
}

fn mode_name(m: QuantitativeMode) -> &'static str {
    match m {
        QuantitativeMode::Oscillation => "oscillation",
        QuantitativeMode::Rough => "rough",
        QuantitativeMode::Theta => "theta",
        QuantitativeMode::EllipticTheta => "elliptic_theta",
        QuantitativeMode::Gradient => "gradient",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub scenario: String,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub entries: Vec<SuiteEntry>,
    /// 0 when everything passes or is not applicable, 1 on a failure, 2 on an execution error.
    pub exit_code: i32,
}

/// Runs scenarios in parallel; results come back in input order.
pub fn run_suite(scenarios: &[Scenario]) -> (Vec<Result<VerificationReport>>, SuiteSummary) {
    let results: Vec<Result<VerificationReport>> = scenarios.par_iter().map(run_scenario).collect();
    let entries: Vec<SuiteEntry> = scenarios
        .iter()
        .zip(&results)
        .map(|(s, r)| match r {
            Ok(r) => SuiteEntry { scenario: s.id.clone(), verdict: Some(r.verdict), error: None },
            Err(e) => SuiteEntry { scenario: s.id.clone(), verdict: None, error: Some(e.to_string()) },
        })
        .collect();
    let exit_code = if entries.iter().any(|e| e.error.is_some()) {
        2
    } else if entries.iter().any(|e| e.verdict == Some(Verdict::Fail)) {
        1
    } else {
        0
    };
    (results, SuiteSummary { entries, exit_code })
}
