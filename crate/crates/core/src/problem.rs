//! Weights, sources, and the composed right-hand side `b(x,s,t)`, together
//! with checkable hypothesis predicates.

use serde::{Deserialize, Serialize};

use crate::domain::{DiscretizedDomain, DomainSpec, Point};
use crate::error::{Error, Result};

/// Roundoff allowance below zero before a state counts as negative.
pub const NEGATIVE_TOL: f64 = 1e-12;

/// Spatial factor of a weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// `scale · d_Ω(x)^ω`.
    DistancePower { scale: f64, omega: f64 },
    /// `1 + ε·exp(−|x−c|²/(2w²))`, a bump that is not concave.
    RampBump { epsilon: f64, center: Point, width: f64 },
    /// `a1` inside the disk `|x−c| < r`, `−a2` outside, linear across a band of width `eta`.
    SmoothedBangBang { a1: f64, a2: f64, center: Point, radius: f64, eta: f64 },
    /// `peak − curvature·|x−c|²`, concave for nonnegative curvature.
    Paraboloid { peak: f64, curvature: f64, center: Point },
}

impl Profile {
    pub fn eval(&self, spec: &DomainSpec, x: Point) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::DistancePower { scale, omega } => {
                scale * spow(spec.signed_distance(x).max(0.0), *omega)
            }
            Profile::RampBump { epsilon, center, width } => {
                let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                1.0 + epsilon * (-r2 / (2.0 * width * width)).exp()
            }
            Profile::SmoothedBangBang { a1, a2, center, radius, eta } => {
                let r = (x[0] - center[0]).hypot(x[1] - center[1]);
                let s = ((radius + eta / 2.0 - r) / eta).clamp(0.0, 1.0);
                s * a1 - (1.0 - s) * a2
            }
            Profile::Paraboloid { peak, curvature, center } => {
                peak - curvature * ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2))
            }
        }
    }
}

/// `a(x,t) = profile(x)·t^γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub profile: Profile,
    #[serde(default)]
    pub gamma: f64,
    /// Claimed concavity exponent of the weight; `None` stands for `θ = ∞`.
    #[serde(default)]
    pub theta: Option<f64>,
}

impl Weight {
    pub fn constant(value: f64) -> Self {
        Weight { profile: Profile::Constant { value }, gamma: 0.0, theta: None }
    }

    pub fn eval(&self, spec: &DomainSpec, x: Point, t: f64) -> f64 {
        self.profile.eval(spec, x) * spow(t, self.gamma)
    }

    /// Catalog name of the weight kind.
    pub fn kind(&self) -> &'static str {
        match (&self.profile, self.gamma > 0.0) {
            (Profile::Constant { .. }, false) => "constant",
            (Profile::DistancePower { .. }, _) => "distance_power",
            (Profile::RampBump { .. }, _) => "ramp_bump_perturbed",
            (Profile::SmoothedBangBang { .. }, _) => "smoothed_bang_bang",
            (_, true) => "separable_power_time",
            (Profile::Paraboloid { .. }, false) => "paraboloid",
        }
    }

    /// `(inf, sup)` of the spatial profile over the interior nodes.
    pub fn profile_bounds(&self, dom: &DiscretizedDomain) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..dom.n_unknowns() {
            let v = self.profile.eval(&dom.spec, dom.node(k));
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// `s^e` with `0^0 = 1` and negative bases clamped to zero.
pub fn spow(s: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        s.max(0.0).powf(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    /// `f ≡ 1` (torsion).
    One,
    PowerQ { q: f64 },
    Identity,
    /// `s·log s`.
    LogS,
    /// `s·log^q(1+s)`.
    Log1pQ { q: f64 },
    /// `s^{q+1}/(1+s^q)`.
    SaturableQ { q: f64 },
    /// `s²/(1+s)`.
    Saturable,
    /// `a(x)s − s²`.
    Logistic,
    /// `(1−s)^p` on `(0,1)`, zero beyond.
    OneMinusSP { p: f64 },
    /// `a(x)s^p + s^q`.
    PowerSum { p: f64, q: f64 },
}

impl Source {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::RangeViolation(m.to_string()));
        match *self {
            Source::PowerQ { q } if !(0.0..1.0).contains(&q) => bad("power_q needs q in [0,1)"),
            Source::Log1pQ { q } | Source::SaturableQ { q } if !(q > 0.0 && q < 1.0) => {
                bad("q must lie in (0,1)")
            }
            Source::OneMinusSP { p } if !(p > 0.0 && p < 1.0) => bad("one_minus_s_p needs p in (0,1)"),
            Source::PowerSum { p, q } if !(p > 0.0 && p < q && q < 1.0) => {
                bad("power_sum needs 0 < p < q < 1")
            }
            _ => Ok(()),
        }
    }

    /// The power-sum range `q ∈ (1/3,1)`, `p ∈ ((3q−1)/2, q)`.
    pub fn power_sum_admissible(p: f64, q: f64) -> bool {
        q > 1.0 / 3.0 && q < 1.0 && p > (3.0 * q - 1.0) / 2.0 && p < q
    }

    /// Catalog name of the source kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Source::One => "one",
            Source::PowerQ { .. } => "power_q",
            Source::Identity => "identity",
            Source::LogS => "log_s",
            Source::Log1pQ { .. } => "log1p_q",
            Source::SaturableQ { .. } => "saturable_q",
            Source::Saturable => "saturable",
            Source::Logistic => "logistic",
            Source::OneMinusSP { .. } => "one_minus_s_p",
            Source::PowerSum { .. } => "power_sum",
        }
    }

    /// True when `b` does not depend on `s`.
    pub fn is_state_independent(&self) -> bool {
        matches!(self, Source::One | Source::PowerQ { q: 0.0 })
    }

    /// `f(s)` for the sources of the form `a(x,t)·f(s)`.
    pub fn f(&self, s: f64) -> f64 {
        match *self {
            Source::One => 1.0,
            Source::PowerQ { q } => spow(s, q),
            Source::Identity => s,
            Source::LogS => {
                if s > 0.0 {
                    s * s.ln()
                } else {
                    0.0
                }
            }
            Source::Log1pQ { q } => s * spow(s.ln_1p(), q),
            Source::SaturableQ { q } => spow(s, q + 1.0) / (1.0 + spow(s, q)),
            Source::Saturable => s * s / (1.0 + s),
            Source::Logistic => s,
            Source::OneMinusSP { p } => {
                if s < 1.0 {
                    spow(1.0 - s, p)
                } else {
                    0.0
                }
            }
            Source::PowerSum { p, .. } => spow(s, p),
        }
    }

    /// `f'(s)` for `s > 0`.
    pub fn df(&self, s: f64) -> f64 {
        match *self {
            Source::One => 0.0,
            Source::PowerQ { q } => {
                if q == 0.0 {
                    0.0
                } else {
                    q * s.powf(q - 1.0)
                }
            }
            Source::Identity | Source::Logistic => 1.0,
            Source::LogS => s.ln() + 1.0,
            Source::Log1pQ { q } => {
                let l = s.ln_1p();
                l.powf(q) + q * s * l.powf(q - 1.0) / (1.0 + s)
            }
            Source::SaturableQ { q } => {
                let sq = s.powf(q);
                ((q + 1.0) * sq * (1.0 + sq) - q * sq * sq) / (1.0 + sq).powi(2)
            }
            Source::Saturable => s * (s + 2.0) / (1.0 + s).powi(2),
            Source::OneMinusSP { p } => {
                if s < 1.0 {
                    -p * (1.0 - s).powf(p - 1.0)
                } else {
                    0.0
                }
            }
            Source::PowerSum { p, .. } => p * s.powf(p - 1.0),
        }
    }

    /// The additive state term outside the weight (`−s²` or `s^q`).
    fn extra(&self, s: f64) -> f64 {
        match *self {
            Source::Logistic => -s * s,
            Source::PowerSum { q, .. } => spow(s, q),
            _ => 0.0,
        }
    }

    fn dextra(&self, s: f64) -> f64 {
        match *self {
            Source::Logistic => -2.0 * s,
            Source::PowerSum { q, .. } => q * s.powf(q - 1.0),
            _ => 0.0,
        }
    }

    /// The `(H1)` exponent `q` of the catalog entry, if any.
    pub fn h1_exponent(&self) -> Option<f64> {
        match *self {
            Source::One => Some(0.0),
            Source::PowerQ { q } => Some(q),
            Source::PowerSum { p, .. } => Some(p),
            Source::OneMinusSP { .. } => Some(0.0),
            _ => None,
        }
    }
}

/// Initial datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    #[default]
    Zero,
    /// Zero datum with the positive branch selected by subsolution seeding.
    SubsolutionSeed,
    /// `scale·φ₁`.
    Eigenfunction { scale: f64 },
    /// One value per interior node.
    Samples { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub domain: DomainSpec,
    pub weight: Weight,
    pub source: Source,
    #[serde(default)]
    pub u0: InitialData,
    pub horizon: f64,
    #[serde(default = "one")]
    pub beta: f64,
    /// Freeze `b(·,·,t)` at `t = horizon` for later times.
    #[serde(default)]
    pub truncate: bool,
}

fn one() -> f64 {
    1.0
}

impl Problem {
    pub fn new(domain: DomainSpec, weight: Weight, source: Source, horizon: f64) -> Self {
        Problem { domain, weight, source, u0: InitialData::Zero, horizon, beta: 1.0, truncate: false }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.source.validate()?;
        if !(self.horizon > 0.0) {
            return Err(Error::RangeViolation("horizon T must be positive".into()));
        }
        if !(1.0..=2.0).contains(&self.beta) {
            return Err(Error::RangeViolation("beta must lie in [1,2]".into()));
        }
        if !(0.0..=1.0).contains(&self.weight.gamma) {
            return Err(Error::RangeViolation("gamma must lie in [0,1]".into()));
        }
        Ok(())
    }

    fn effective_time(&self, t: f64) -> f64 {
        if self.truncate {
            t.min(self.horizon)
        } else {
            t
        }
    }

    /// `b(x,s,t)`; `t = ∞` is passed as `f64::INFINITY`.
    pub fn eval_source(&self, x: Point, s: f64, t: f64) -> Result<f64> {
        if s < -NEGATIVE_TOL {
            return Err(Error::NegativeState(s));
        }
        Ok(self.b(x, s.max(0.0), t))
    }

    /// `b(x,s,t)` with `s` already clipped to be nonnegative.
    pub fn b(&self, x: Point, s: f64, t: f64) -> f64 {
        let a = self.weight.eval(&self.domain, x, self.effective_time(t));
        a * self.source.f(s) + self.source.extra(s)
    }

    /// `∂_s b(x,s,t)` for `s > 0`.
    pub fn db_ds(&self, x: Point, s: f64, t: f64) -> f64 {
        let a = self.weight.eval(&self.domain, x, self.effective_time(t));
        a * self.source.df(s) + self.source.dextra(s)
    }

    /// Time used for the stationary (`t = ∞`) problem.
    pub fn stationary_time(&self) -> f64 {
        if self.truncate || self.weight.gamma == 0.0 {
            self.horizon
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Catalog,
    Numeric,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub verdict: Verdict,
    pub basis: Basis,
}

impl Flag {
    fn catalog(ok: bool) -> Self {
        Flag { verdict: if ok { Verdict::Holds } else { Verdict::Fails }, basis: Basis::Catalog }
    }
    fn numeric(ok: bool) -> Self {
        Flag { verdict: if ok { Verdict::Holds } else { Verdict::Fails }, basis: Basis::Numeric }
    }
    fn undetermined() -> Self {
        Flag { verdict: Verdict::Undetermined, basis: Basis::None }
    }
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub h1: Flag,
    pub h1_prime: Flag,
    pub h1_star: Flag,
    pub h2: Flag,
    pub h2_star: Flag,
    pub h3: Flag,
    pub k: Option<f64>,
    pub q: Option<f64>,
    pub gamma: f64,
    pub omega: Option<f64>,
    pub horizon: f64,
    /// Smallest sampled `L` with `b(s) − b(r) ≤ (L/r)(s − r)`.
    pub lipschitz_l: Option<f64>,
    /// `min C*_{a^θ}` over sampled triples, zero when none is negative.
    pub weight_theta_defect: f64,
}

/// Tolerance of the sampled certificates.
pub const CERT_TOL: f64 = 1e-12;

/// 48 log-spaced values in `[1e−6, 10]`.
pub fn hypothesis_states() -> Vec<f64> {
    (0..48).map(|i| 10f64.powf(-6.0 + 7.0 * i as f64 / 47.0)).collect()
}

fn sample_points(spec: &DomainSpec) -> Vec<Point> {
    let h = spec.inradius() / 6.0;
    match DiscretizedDomain::build(spec.clone(), h) {
        Ok(d) => (0..d.n_unknowns()).map(|k| d.node(k)).collect(),
        Err(_) => vec![spec.center()],
    }
}

/// Evaluates the hypothesis predicates for solutions bounded by `m_sup`.
pub fn check_hypotheses(problem: &Problem, m_sup: f64) -> HypothesisReport {
    let big_t = problem.horizon;
    let times: Vec<f64> = (0..=8).map(|i| big_t * i as f64 / 8.0).collect();
    let states: Vec<f64> = hypothesis_states().into_iter().filter(|&s| s <= m_sup).collect();
    let xs = sample_points(&problem.domain);
    let gamma = problem.weight.gamma;
    let profile_inf = xs
        .iter()
        .map(|&x| problem.weight.profile.eval(&problem.domain, x))
        .fold(f64::INFINITY, f64::min);
    let profile_sup = xs
        .iter()
        .map(|&x| problem.weight.profile.eval(&problem.domain, x))
        .fold(f64::NEG_INFINITY, f64::max);

    // (H1): b ≥ k t^γ s^q on (0,M].
    let (h1, k, q) = match (&problem.source, problem.source.h1_exponent()) {
        (_, None) => (Flag::catalog(false), None, None),
        (Source::OneMinusSP { p }, Some(q)) => {
            let k = profile_inf * spow(1.0 - m_sup, *p);
            let ok = m_sup < 1.0 && profile_inf > 0.0;
            (Flag::catalog(ok), ok.then_some(k), Some(q))
        }
        (_, Some(q)) => {
            let ok = profile_inf > 0.0;
            (Flag::catalog(ok), ok.then_some(profile_inf), Some(q))
        }
    };
    let h1_star = match problem.source {
        Source::One | Source::PowerQ { .. } | Source::PowerSum { .. } => {
            Flag::catalog(profile_inf > 0.0)
        }
        Source::OneMinusSP { .. } => Flag::catalog(false),
        _ => Flag::catalog(false),
    };

    // (H1'): s-independent b ≥ k d^ω t^γ.
    let (h1_prime, omega) = if problem.source.is_state_independent() {
        match problem.weight.profile {
            Profile::DistancePower { scale, omega } => (Flag::catalog(scale > 0.0), Some(omega)),
            _ if profile_inf > 0.0 => (Flag::catalog(true), Some(0.0)),
            _ => (Flag::undetermined(), None),
        }
    } else {
        (Flag::catalog(false), None)
    };

    // (H2): nonnegativity sampled, Lipschitz-type constant fitted.
    let mut nonneg = true;
    let mut lip: f64 = 0.0;
    for &x in &xs {
        for &t in &times[1..] {
            for (i, &r) in states.iter().enumerate() {
                let br = problem.b(x, r, t);
                if br < -CERT_TOL {
                    nonneg = false;
                }
                for &s in &states[i + 1..] {
                    let bs = problem.b(x, s, t);
                    lip = lip.max((bs - br) * r / (s - r));
                }
            }
        }
    }
    let h2 = Flag::numeric(nonneg);
    let lipschitz_l = if let (true, Source::PowerQ { q }) = (nonneg, &problem.source) {
        // Closed form q·‖a‖·M^q, with the time factor at the horizon.
        Some((q * profile_sup.abs() * spow(big_t, gamma) * spow(m_sup, *q)).max(lip))
    } else {
        nonneg.then_some(lip)
    };

    let h2_star = if !nonneg {
        Flag::catalog(false)
    } else {
        match problem.source {
            Source::PowerQ { q } => Flag::catalog(q == 0.0 || q >= 0.5),
            Source::PowerSum { p, .. } => Flag::catalog(p >= 0.5),
            Source::LogS | Source::Logistic => Flag::catalog(false),
            _ => Flag::catalog(true),
        }
    };

    // (H3): b nondecreasing in t, sampled.
    let mut monotone = true;
    for &x in &xs {
        for &s in &states {
            for w in times.windows(2) {
                if problem.b(x, s, w[1]) < problem.b(x, s, w[0]) - CERT_TOL {
                    monotone = false;
                }
            }
        }
    }
    let h3 = Flag::numeric(monotone);

    let theta = problem.weight.theta.unwrap_or(1.0);
    let weight_theta_defect = weight_concavity_defect(&problem.weight, &problem.domain, theta, big_t);

    HypothesisReport {
        h1,
        h1_prime,
        h1_star,
        h2,
        h2_star,
        h3,
        k,
        q,
        gamma,
        omega,
        horizon: big_t,
        lipschitz_l,
        weight_theta_defect,
    }
}

/// `min(0, min C*_{a^θ(·,t)})` over node pairs of a coarse grid and `λ ∈ {k/8}`.
pub fn weight_concavity_defect(weight: &Weight, spec: &DomainSpec, theta: f64, t: f64) -> f64 {
    let xs = sample_points(spec);
    let g = |x: Point| spow(weight.eval(spec, x, t), theta);
    let mut worst: f64 = 0.0;
    for (i, &x1) in xs.iter().enumerate() {
        for &x3 in &xs[i + 1..] {
            for k in 1..8 {
                let l = k as f64 / 8.0;
                let x2 = [l * x3[0] + (1.0 - l) * x1[0], l * x3[1] + (1.0 - l) * x1[1]];
                worst = worst.min(g(x2) - l * g(x3) - (1.0 - l) * g(x1));
            }
        }
    }
    worst
}

/// `Λ = sup_{s>0} s·f̄'(s)` with `f̄(s) = f(s)/s`.
pub fn sup_slope_lambda(source: &Source) -> Result<f64> {
    match *source {
        Source::One | Source::PowerQ { .. } | Source::Identity | Source::Logistic => Ok(0.0),
        Source::PowerSum { .. } => Ok(0.0),
        Source::LogS => Ok(1.0),
        Source::Saturable => Ok(0.25),
        Source::SaturableQ { q } => Ok(q / 4.0),
        Source::Log1pQ { .. } | Source::OneMinusSP { .. } => numeric_sup_slope(source),
    }
}

fn numeric_sup_slope(source: &Source) -> Result<f64> {
    let n = 4000;
    let mut best = f64::NEG_INFINITY;
    let mut last = 0.0;
    for i in 0..=n {
        let s = 10f64.powf(-8.0 + 16.0 * i as f64 / n as f64);
        let v = source.df(s) - source.f(s) / s;
        best = best.max(v);
        last = v;
    }
    if !best.is_finite() || (last >= best && best > 1e6) {
        return Err(Error::Unbounded);
    }
    Ok(if best > 0.0 { best * 1.01 } else { best.max(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(weight: Weight, source: Source) -> Problem {
        Problem::new(DomainSpec::UnitSquare, weight, source, 1.0)
    }

    #[test]
    fn source_examples() {
        let p = square(Weight::constant(1.0), Source::PowerQ { q: 0.5 });
        assert_eq!(p.eval_source([0.5, 0.5], 4.0, 0.0).unwrap(), 2.0);
        let p = square(Weight::constant(2.0), Source::Logistic);
        assert_eq!(p.eval_source([0.5, 0.5], 3.0, 0.0).unwrap(), -3.0);
        let w = Weight { profile: Profile::Constant { value: 3.0 }, gamma: 0.5, theta: None };
        let p = square(w, Source::PowerQ { q: 0.0 });
        assert_eq!(p.eval_source([0.5, 0.5], 0.7, 4.0).unwrap(), 6.0);
    }

    #[test]
    fn zero_state_conventions() {
        assert_eq!(Source::PowerQ { q: 0.0 }.f(0.0), 1.0);
        assert_eq!(Source::PowerQ { q: 0.5 }.f(0.0), 0.0);
        let p = square(Weight::constant(1.0), Source::Identity);
        assert!(matches!(p.eval_source([0.5, 0.5], -1e-6, 0.0), Err(Error::NegativeState(_))));
        assert_eq!(p.eval_source([0.5, 0.5], -1e-13, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn truncation_freezes_time() {
        let w = Weight { profile: Profile::Constant { value: 1.0 }, gamma: 1.0, theta: None };
        let mut p = square(w, Source::One);
        p.truncate = true;
        assert_eq!(p.b([0.5, 0.5], 0.0, 5.0), 1.0);
        assert_eq!(p.b([0.5, 0.5], 0.0, f64::INFINITY), 1.0);
    }

    #[test]
    fn lane_emden_hypotheses() {
        let r = check_hypotheses(&square(Weight::constant(1.0), Source::PowerQ { q: 0.5 }), 1.0);
        assert!(r.h1.holds() && r.h2.holds() && r.h3.holds());
        assert_eq!((r.k, r.q, r.gamma), (Some(1.0), Some(0.5), 0.0));
    }

    #[test]
    fn one_minus_s_hypotheses() {
        let p = square(Weight::constant(1.0), Source::OneMinusSP { p: 0.5 });
        let r = check_hypotheses(&p, 0.5);
        assert!(r.h1.holds());
        assert_eq!(r.q, Some(0.0));
        assert!(!r.h1_star.holds());
        assert!(!check_hypotheses(&p, 1.0).h1.holds());
    }

    #[test]
    fn logistic_is_not_nonnegative() {
        // At s = 3 > a = 2 the source equals 2·3 − 9 < 0.
        let r = check_hypotheses(&square(Weight::constant(2.0), Source::Logistic), 10.0);
        assert_eq!(r.h2.verdict, Verdict::Fails);
    }

    #[test]
    fn lambda_values() {
        assert_eq!(sup_slope_lambda(&Source::Identity).unwrap(), 0.0);
        assert_eq!(sup_slope_lambda(&Source::LogS).unwrap(), 1.0);
        assert_eq!(sup_slope_lambda(&Source::Saturable).unwrap(), 0.25);
        // Oracle: s/(1+s)² peaks at s = 1 with value 1/4.
        let s_peak: f64 = 1.0;
        assert_eq!(s_peak / (1.0 + s_peak).powi(2), 0.25);
    }

    #[test]
    fn numeric_slope_of_log1p() {
        let l = sup_slope_lambda(&Source::Log1pQ { q: 0.5 }).unwrap();
        assert!(l > 0.0 && l < 0.5);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let sources = [
            Source::PowerQ { q: 0.3 },
            Source::LogS,
            Source::Log1pQ { q: 0.4 },
            Source::SaturableQ { q: 0.6 },
            Source::Saturable,
            Source::OneMinusSP { p: 0.5 },
            Source::PowerSum { p: 0.5, q: 0.6 },
        ];
        for src in sources {
            for s in [0.1, 0.5, 0.9, 2.0] {
                if matches!(src, Source::OneMinusSP { .. }) && s > 1.0 {
                    continue;
                }
                let e = 1e-6;
                let fd = (src.f(s + e) - src.f(s - e)) / (2.0 * e);
                assert!((fd - src.df(s)).abs() < 1e-5, "{src:?} at {s}");
            }
        }
    }

    #[test]
    fn distance_power_weight_is_concave_when_exponents_sum_to_one() {
        let w = Weight {
            profile: Profile::DistancePower { scale: 1.0, omega: 0.5 },
            gamma: 0.5,
            theta: Some(1.0),
        };
        assert!(weight_concavity_defect(&w, &DomainSpec::UnitSquare, 1.0, 1.0) > -1e-12);
        let bump = Weight {
            profile: Profile::RampBump { epsilon: 0.2, center: [0.5, 0.5], width: 0.15 },
            gamma: 0.0,
            theta: Some(1.0),
        };
        assert!(weight_concavity_defect(&bump, &DomainSpec::UnitSquare, 1.0, 1.0) < -1e-3);
    }
}
