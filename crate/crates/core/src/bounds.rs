//! Closed-form concavity exponents and right-hand sides of the defect bounds.

use serde::{Deserialize, Serialize};

use crate::domain::{DiscretizedDomain, Point};
use crate::error::{Error, Result};
use crate::operators::EigenPair;
use crate::problem::HypothesisReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentVariant {
    LaneEmden,
    ConstantWeight,
    Torsion,
}

fn range(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::RangeViolation(msg.into()))
    }
}

/// Power-concavity exponent of `u(·,⋆^β)`; `θ = ∞` is passed as `f64::INFINITY`.
pub fn alpha_exponent(q: f64, gamma: f64, beta: f64, theta: f64, variant: ExponentVariant) -> Result<f64> {
    range((0.0..1.0).contains(&q), "q must satisfy 0 ≤ q < 1")?;
    range((1.0..=2.0).contains(&beta), "β must satisfy 1 ≤ β ≤ 2")?;
    range(theta >= 1.0 || theta.is_infinite() && theta > 0.0, "θ must satisfy θ ≥ 1")?;
    match variant {
        ExponentVariant::LaneEmden => {
            range((0.0..=1.0).contains(&gamma), "γ must satisfy 0 ≤ γ ≤ 1")?;
            range(beta * gamma < 1.0, "β must satisfy β < 1/γ")?;
            range(theta >= 1.0 / (1.0 - beta * gamma), "θ must satisfy θ ≥ 1/(1 − βγ)")?;
            if theta.is_infinite() {
                Ok((1.0 - q) / (2.0 + beta * gamma))
            } else {
                Ok((1.0 - q) * theta / (2.0 * theta + beta * gamma * theta + 1.0))
            }
        }
        ExponentVariant::ConstantWeight => {
            range((0.0..=1.0).contains(&gamma), "γ must satisfy 0 ≤ γ ≤ 1")?;
            range(beta * gamma <= 1.0, "β must satisfy β ≤ 1/γ")?;
            Ok((1.0 - q) / (2.0 + beta * gamma))
        }
        ExponentVariant::Torsion => {
            range(q == 0.0, "the torsion variant needs q = 0")?;
            range((0.0..=0.5).contains(&gamma), "γ must satisfy 0 ≤ γ ≤ 1/2")?;
            if theta.is_infinite() {
                return Ok(1.0 / (2.0 + 2.0 * gamma));
            }
            range(gamma < 0.5, "γ must satisfy γ < 1/2 for a nonconstant weight")?;
            range(theta >= 1.0 / (1.0 - 2.0 * gamma), "θ must satisfy θ ≥ 1/(1 − 2γ)")?;
            Ok(theta / (2.0 * theta + 2.0 * theta * gamma + 1.0))
        }
    }
}

/// Supremum of the admissible exponents near the parabolic boundary:
/// `2(1−q)/(2β(1+γ)+(2−β)(1−q))`.
pub fn alpha_window(q: f64, gamma: f64, beta: f64) -> f64 {
    2.0 * (1.0 - q) / (2.0 * beta * (1.0 + gamma) + (2.0 - beta) * (1.0 - q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LogVariant {
    /// `−T e^{1+ΛT} sup (C*_{b/u})⁻`.
    General,
    /// `Λ = 0`.
    Eigen,
    /// `θ'`-concave `f/s`: the defect argument is `sup (C*_{a^θ})⁻`.
    ProductTheta { fbar_norm: f64, theta: f64 },
    /// Concave `f/s`: the defect argument is `osc(a)`.
    ProductOscillation { fbar_norm: f64 },
}

/// Lower bound for `inf C*_{log u}` over `[0,T]`.
pub fn log_concavity_rhs(horizon: f64, slope: f64, sup_neg_defect: f64, variant: LogVariant) -> f64 {
    let d = sup_neg_defect.max(0.0);
    let lam = if matches!(variant, LogVariant::Eigen) { 0.0 } else { slope };
    let factor = horizon * (1.0 + lam * horizon).exp();
    let v = match variant {
        LogVariant::General | LogVariant::Eigen => factor * d,
        LogVariant::ProductTheta { fbar_norm, theta } => factor * fbar_norm * d.powf(1.0 / theta),
        LogVariant::ProductOscillation { fbar_norm } => factor * fbar_norm * d,
    };
    if v == 0.0 {
        0.0
    } else {
        -v
    }
}

/// Measured inputs of the quantitative bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub q: f64,
    pub gamma: f64,
    pub beta: f64,
    /// `f64::INFINITY` for a constant weight.
    pub theta: f64,
    pub p: f64,
    pub omega: f64,
    /// Weight bounds `m ≤ a ≤ M`.
    pub m: f64,
    pub big_m: f64,
    pub rho: f64,
    pub horizon: f64,
    pub slope: f64,
    pub sup_norm_u_inf: f64,
    pub osc_a: f64,
    pub osc_a2: f64,
    /// `sup (C_{a^θ})⁻` over `Ω_ρ` samples.
    pub sup_neg_defect_a_theta: f64,
    /// `inf C_a` over `Ω_ρ` samples.
    pub inf_c_a: f64,
    /// `inf a`, `sup a` over `Ω_ρ`.
    pub a_min_rho: f64,
    pub a_max_rho: f64,
    /// Averaged argmin gradient and the spread of the three gradients.
    pub xi: Point,
    pub xi_mismatch: f64,
    /// Evaluate gated bounds outside their validity window.
    pub experimental: bool,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            q: 0.0,
            gamma: 0.0,
            beta: 1.0,
            theta: f64::INFINITY,
            p: 0.0,
            omega: 0.0,
            m: 1.0,
            big_m: 1.0,
            rho: 0.0,
            horizon: 1.0,
            slope: 0.0,
            sup_norm_u_inf: 1.0,
            osc_a: 0.0,
            osc_a2: 0.0,
            sup_neg_defect_a_theta: 0.0,
            inf_c_a: 0.0,
            a_min_rho: 1.0,
            a_max_rho: 1.0,
            xi: [0.0, 0.0],
            xi_mismatch: 0.0,
            experimental: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantitativeMode {
    /// `−‖u∞‖^{(1−q)/2} osc(a²)/m²`.
    Oscillation,
    /// `−‖u∞‖^{(1−q)/2} (2 + osc(a)/m) osc(a)/m`.
    Rough,
    /// θ-concavity bound for the parabolic problem, gated by `m^θ ≥ M^θ/2`.
    Theta,
    /// θ-concavity bound for the stationary problem, gated by `θ ≤ log 2/log(M/m)`.
    EllipticTheta,
    /// Bound through `𝔪_ρ`, `𝔐_ρ` built from the argmin gradient.
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mode: QuantitativeMode,
    pub rhs: f64,
    pub alpha: f64,
    /// `𝔪_ρ`, `𝔐_ρ`, `ε` for the gradient mode.
    pub frak_m: Option<f64>,
    pub frak_big_m: Option<f64>,
    pub epsilon: Option<f64>,
    pub xi_mismatch: Option<f64>,
    pub validity: Vec<(String, bool)>,
    pub experimental: bool,
}

/// `𝔪_ρ`, `𝔐_ρ`, `ε` for `f^ξ(x) = ((1+q)/(1−q))|ξ|² + ((1−q)/2) a(x)`.
pub fn frak_bounds(q: f64, xi: Point, a_min: f64, a_max: f64) -> (f64, f64, f64) {
    let grad = (1.0 + q) / (1.0 - q) * (xi[0] * xi[0] + xi[1] * xi[1]);
    let s = 2.0 / (1.0 - q);
    let lo = s * (grad + (1.0 - q) / 2.0 * a_min);
    let hi = s * (grad + (1.0 - q) / 2.0 * a_max);
    (lo, hi, hi - lo)
}

/// `σ = ((1−q)/2)·𝔪_ρ/(λv3 + (1−λ)v1)²`.
pub fn sigma(q: f64, frak_m: f64, lambda: f64, v1: f64, v3: f64) -> f64 {
    (1.0 - q) / 2.0 * frak_m / (lambda * v3 + (1.0 - lambda) * v1).powi(2)
}

fn neg(x: f64) -> f64 {
    (-x).max(0.0)
}

fn nonpositive(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x.abs()
    }
}

/// Right-hand side of a quantitative concavity bound.
pub fn quantitative_rhs(params: &BoundParams, mode: QuantitativeMode) -> Result<BoundReport> {
    let p = params;
    let mut validity = Vec::new();
    if !(p.m > 0.0 && p.m <= p.big_m) {
        return Err(Error::ValidityViolation("weight bounds need 0 < m ≤ M".into()));
    }
    if !(0.0..1.0).contains(&p.q) {
        return Err(Error::ValidityViolation("q must satisfy 0 ≤ q < 1".into()));
    }
    let half = (1.0 - p.q) / 2.0;
    let mut report = BoundReport {
        mode,
        rhs: 0.0,
        alpha: half,
        frak_m: None,
        frak_big_m: None,
        epsilon: None,
        xi_mismatch: None,
        validity: Vec::new(),
        experimental: false,
    };
    let gate = |name: &str, ok: bool, validity: &mut Vec<(String, bool)>| -> Result<bool> {
        validity.push((name.to_string(), ok));
        if !ok && !p.experimental {
            return Err(Error::ValidityViolation(format!("{name} fails")));
        }
        Ok(!ok)
    };
    match mode {
        QuantitativeMode::Oscillation => {
            report.rhs = nonpositive(p.sup_norm_u_inf.powf(half) * p.osc_a2 / (p.m * p.m));
        }
        QuantitativeMode::Rough => {
            let r = p.osc_a / p.m;
            report.rhs = nonpositive(p.sup_norm_u_inf.powf(half) * (2.0 + r) * r);
        }
        QuantitativeMode::Theta | QuantitativeMode::EllipticTheta => {
            let th = p.theta;
            if !(th >= 1.0 && th.is_finite()) {
                return Err(Error::ValidityViolation("θ must be finite and ≥ 1".into()));
            }
            report.experimental = if mode == QuantitativeMode::Theta {
                gate("m^θ ≥ M^θ/2", p.m.powf(th) >= p.big_m.powf(th) / 2.0, &mut validity)?
            } else {
                let ratio = p.big_m / p.m;
                gate("θ ≤ log 2/log(M/m)", ratio == 1.0 || th <= 2f64.ln() / ratio.ln(), &mut validity)?
            };
            let e = (th - 1.0) * (1.0 - p.q) / (2.0 * th + 1.0);
            report.alpha = th * (1.0 - p.q) / (2.0 * th + 1.0);
            report.rhs = nonpositive(
                2.0 * th / (2.0 * th + 1.0) / p.m
                    * p.sup_norm_u_inf.powf(e)
                    * p.sup_neg_defect_a_theta.max(0.0).powf(1.0 / th),
            );
        }
        QuantitativeMode::Gradient => {
            let (lo, hi, eps) = frak_bounds(p.q, p.xi, p.a_min_rho, p.a_max_rho);
            gate("𝔪_ρ > 0", lo > 0.0, &mut validity)?;
            report.frak_m = Some(lo);
            report.frak_big_m = Some(hi);
            report.epsilon = Some(eps);
            report.xi_mismatch = Some(p.xi_mismatch);
            report.rhs = nonpositive(p.sup_norm_u_inf.powf(half) / lo * neg(p.inf_c_a - hi / lo * eps));
        }
    }
    report.validity = validity;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// `C e^{−λ₁t} t^{(1+γ)/(1−q)} φ₁(x)`.
    InteriorT0,
    /// Growth exponent along inward normals at the boundary corner `t = 0`.
    Corner,
    /// Interior growth exponent `(2+2γ+ω)/2` for distance-type weights.
    TorsionInterior,
    /// Corner exponent `2+2γ+ω`.
    TorsionCorner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryBound {
    pub kind: BoundaryKind,
    pub exponent: f64,
    /// Explicit constant where one exists.
    pub constant: Option<f64>,
    /// Bound value at the requested `(x, t)` where the constant is explicit.
    pub value: Option<f64>,
}

/// `((1−q)k/(1+γ))^{1/(1−q)}`.
pub fn boundary_constant(k: f64, q: f64, gamma: f64) -> f64 {
    ((1.0 - q) * k / (1.0 + gamma)).powf(1.0 / (1.0 - q))
}

/// Lower barriers near `t = 0` and the parabolic corner.
pub fn boundary_lower_bound(
    params: &BoundParams,
    hyp: &HypothesisReport,
    kind: BoundaryKind,
    dom: &DiscretizedDomain,
    x: Point,
    t: f64,
    eig: &EigenPair,
) -> Result<BoundaryBound> {
    let (q, g) = (params.q, params.gamma);
    match kind {
        BoundaryKind::InteriorT0 | BoundaryKind::Corner => {
            if !(hyp.h1.holds() || hyp.h1_prime.holds()) {
                return Err(Error::HypothesisViolated("growth near zero is not certified".into()));
            }
        }
        BoundaryKind::TorsionInterior | BoundaryKind::TorsionCorner => {
            if !hyp.h1_prime.holds() {
                return Err(Error::HypothesisViolated("distance-type growth is not certified".into()));
            }
        }
    }
    match kind {
        BoundaryKind::InteriorT0 => {
            let k = hyp.k.ok_or_else(|| Error::HypothesisViolated("growth constant k is unknown".into()))?;
            if !(t > 0.0 && t < params.horizon) {
                return Err(Error::RangeViolation("t must lie in (0,T)".into()));
            }
            let c = boundary_constant(k, q, g);
            let exponent = (1.0 + g) / (1.0 - q);
            let phi = dom.interpolate(&dom.to_grid(&eig.phi.values), x).ok_or(Error::OutOfDomain)?;
            let value = c * (-eig.lambda * t).exp() * t.powf(exponent) * phi;
            Ok(BoundaryBound { kind, exponent, constant: Some(c), value: Some(value) })
        }
        BoundaryKind::Corner => {
            let b = params.beta;
            let exponent = (2.0 * b * (1.0 + g) + (2.0 - b) * (1.0 - q)) / (2.0 * (1.0 - q));
            Ok(BoundaryBound { kind, exponent, constant: None, value: None })
        }
        BoundaryKind::TorsionInterior => {
            Ok(BoundaryBound { kind, exponent: (2.0 + 2.0 * g + params.omega) / 2.0, constant: None, value: None })
        }
        BoundaryKind::TorsionCorner => {
            Ok(BoundaryBound { kind, exponent: 2.0 + 2.0 * g + params.omega, constant: None, value: None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_exponents() {
        let inf = f64::INFINITY;
        assert_eq!(alpha_exponent(0.0, 0.0, 1.0, inf, ExponentVariant::LaneEmden).unwrap(), 0.5);
        assert!((alpha_exponent(0.0, 0.5, 1.0, inf, ExponentVariant::ConstantWeight).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(alpha_exponent(0.5, 0.0, 1.0, inf, ExponentVariant::LaneEmden).unwrap(), 0.25);
        assert!((alpha_exponent(0.0, 0.0, 2.0, 1.0, ExponentVariant::Torsion).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exponent_ranges() {
        let e = alpha_exponent(0.0, 0.5, 2.0, 10.0, ExponentVariant::LaneEmden).unwrap_err();
        assert!(matches!(e, Error::RangeViolation(ref s) if s.contains("1/γ")));
        assert!(alpha_exponent(1.0, 0.0, 1.0, 2.0, ExponentVariant::LaneEmden).is_err());
        assert!(alpha_exponent(0.0, 0.5, 1.0, 1.5, ExponentVariant::LaneEmden).is_err());
    }

    #[test]
    fn log_rhs() {
        assert!((log_concavity_rhs(1.0, 0.0, 0.1, LogVariant::General) + 0.1 * std::f64::consts::E).abs() < 1e-15);
        assert_eq!(log_concavity_rhs(1.0, 2.0, 0.0, LogVariant::General), 0.0);
        assert_eq!(log_concavity_rhs(1.0, 0.3, 0.0, LogVariant::ProductOscillation { fbar_norm: 2.0 }), 0.0);
    }

    #[test]
    fn quantitative_examples() {
        let p = BoundParams { theta: 1.0, sup_neg_defect_a_theta: 0.3, sup_norm_u_inf: 7.0, ..BoundParams::default() };
        let r = quantitative_rhs(&p, QuantitativeMode::Theta).unwrap();
        assert!((r.rhs + 0.2).abs() < 1e-15);
        let p = BoundParams { osc_a: 0.1, big_m: 1.1, ..BoundParams::default() };
        assert!((quantitative_rhs(&p, QuantitativeMode::Rough).unwrap().rhs + 0.21).abs() < 1e-15);
        assert_eq!(quantitative_rhs(&BoundParams::default(), QuantitativeMode::Oscillation).unwrap().rhs, 0.0);
    }

    #[test]
    fn theta_gate() {
        let bad = BoundParams { m: 1.0, big_m: 3.0, theta: 2.0, ..BoundParams::default() };
        assert!(matches!(quantitative_rhs(&bad, QuantitativeMode::Theta), Err(Error::ValidityViolation(_))));
        let ok = BoundParams { m: 1.0, big_m: 1.2, theta: 2.0, ..BoundParams::default() };
        assert!(quantitative_rhs(&ok, QuantitativeMode::Theta).is_ok());
        let exp = BoundParams { experimental: true, ..bad };
        assert!(quantitative_rhs(&exp, QuantitativeMode::Theta).unwrap().experimental);
    }

    #[test]
    fn boundary_barriers() {
        use crate::domain::DomainSpec;
        use crate::operators::principal_eigenpair;
        use crate::problem::{check_hypotheses, Problem, Source, Weight};
        let dom = DiscretizedDomain::build(DomainSpec::UnitSquare, 0.125).unwrap();
        let eig = principal_eigenpair(&dom).unwrap();
        let prob = Problem::new(dom.spec.clone(), Weight::constant(1.0), Source::One, 1.0);
        let hyp = check_hypotheses(&prob, 1.0);
        let b = BoundParams { beta: 2.0, ..BoundParams::default() };
        let corner = boundary_lower_bound(&b, &hyp, BoundaryKind::Corner, &dom, [0.5, 0.5], 0.5, &eig).unwrap();
        assert_eq!(corner.exponent, 2.0);
        let t = 0.25;
        let interior = boundary_lower_bound(&b, &hyp, BoundaryKind::InteriorT0, &dom, [0.5, 0.5], t, &eig).unwrap();
        assert_eq!(interior.constant, Some(1.0));
        assert!((interior.value.unwrap() - (-eig.lambda * t).exp() * t).abs() < 1e-12);
        assert_eq!(alpha_window(0.0, 0.0, 2.0), 0.5);
        assert!((alpha_window(0.5, 0.0, 1.0) - 0.4).abs() < 1e-15);
    }
}
