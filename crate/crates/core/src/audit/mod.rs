//! Concavity functions, their sampled minimization, quasiconcavity checks and
//! concave envelopes.

mod defect;
mod envelope;
mod evaluator;
mod quasi;

pub use defect::{min_defect, DefectReport, Mode, SamplerConfig};
pub use envelope::{concave_approximation, concave_approximation_1d, hyers_ulam_constant, Envelope, Envelope1d, HullCertificate};
pub use evaluator::{power_transform, Evaluator, FieldEvaluator, FnEvaluator, TransformedTrajectory};
pub use quasi::quasiconcavity_defect;

use serde::{Deserialize, Serialize};

use crate::domain::Point;
use crate::error::Result;
use crate::operators::Time;

/// Arguments `(x1, x3, t1, t3, λ)` of a concavity function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuple5 {
    pub x1: Point,
    pub x3: Point,
    pub t1: Time,
    pub t3: Time,
    pub lambda: f64,
}

impl Tuple5 {
    pub fn spatial(x1: Point, x3: Point, t: Time, lambda: f64) -> Self {
        Tuple5 { x1, x3, t1: t, t3: t, lambda }
    }

    pub fn x2(&self) -> Point {
        let l = self.lambda;
        [l * self.x3[0] + (1.0 - l) * self.x1[0], l * self.x3[1] + (1.0 - l) * self.x1[1]]
    }

    /// Time arguments with mixed finite/∞ pairs sent jointly to ∞.
    pub fn times(&self) -> (Time, Time, Time) {
        match (self.t1, self.t3) {
            (Time::Finite(a), Time::Finite(b)) => {
                let l = self.lambda;
                (self.t1, Time::Finite(l * b + (1.0 - l) * a), self.t3)
            }
            _ => (Time::Infinity, Time::Infinity, Time::Infinity),
        }
    }
}

/// `v(x2,t2) − λ v(x3,t3) − (1−λ) v(x1,t1)`.
pub fn concavity_value<E: Evaluator + ?Sized>(v: &E, tup: &Tuple5) -> Result<f64> {
    let (t1, t2, t3) = tup.times();
    let v1 = v.eval(tup.x1, t1)?;
    let v2 = v.eval(tup.x2(), t2)?;
    let v3 = v.eval(tup.x3, t3)?;
    Ok(v2 - tup.lambda * v3 - (1.0 - tup.lambda) * v1)
}

/// Value of the harmonic concavity function, or `None` off its domain.
pub fn harmonic_combination(g1: f64, g2: f64, g3: f64, lambda: f64) -> Option<f64> {
    let den = lambda * g1 + (1.0 - lambda) * g3;
    if den > 0.0 {
        Some(g2 - g1 * g3 / den)
    } else if g1 == 0.0 && g3 == 0.0 {
        Some(g2)
    } else {
        None
    }
}

/// Harmonic concavity function; `Ok(None)` marks a tuple outside its domain.
pub fn harmonic_concavity_value<E: Evaluator + ?Sized>(g: &E, tup: &Tuple5) -> Result<Option<f64>> {
    let (t1, t2, t3) = tup.times();
    let g1 = g.eval(tup.x1, t1)?;
    let g2 = g.eval(tup.x2(), t2)?;
    let g3 = g.eval(tup.x3, t3)?;
    Ok(harmonic_combination(g1, g2, g3, tup.lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_square(f: impl Fn(Point, f64) -> f64 + Sync + Send + 'static) -> FnEvaluator {
        FnEvaluator::on_domain(crate::domain::DomainSpec::UnitSquare, 0.05, f)
    }

    #[test]
    fn affine_field_has_zero_defect() {
        let v = on_square(|x, t| 2.0 * x[0] - x[1] + 3.0 * t + 1.0);
        let tup = Tuple5 { x1: [0.1, 0.2], x3: [0.8, 0.7], t1: Time::Finite(0.3), t3: Time::Finite(1.1), lambda: 0.37 };
        assert!(concavity_value(&v, &tup).unwrap().abs() < 1e-14);
    }

    #[test]
    fn quadratic_slice() {
        let v = on_square(|x, _| x[0] * x[0]);
        let tup = Tuple5::spatial([0.0, 0.4], [1.0, 0.4], Time::Finite(1.0), 0.5);
        assert!((concavity_value(&v, &tup).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn bilinear_in_space_and_time() {
        let v = on_square(|x, t| x[0] * t);
        let tup = Tuple5 { x1: [0.0, 0.5], x3: [1.0, 0.5], t1: Time::Finite(0.0), t3: Time::Finite(1.0), lambda: 0.5 };
        assert!((concavity_value(&v, &tup).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic_combination(2.0, 2.0, 2.0, 0.3), Some(0.0));
        let hc = harmonic_combination(1.0, 1.5, 2.0, 0.5).unwrap();
        assert!((hc - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(harmonic_combination(0.0, 0.7, 0.0, 0.5), Some(0.7));
        assert_eq!(harmonic_combination(0.0, 0.7, 1.0, 1.0), None);
    }

    #[test]
    fn reciprocal_time_is_harmonic_affine() {
        let g = on_square(|_, t| 1.0 / t);
        for &(t1, t3, l) in &[(0.5, 2.0, 0.3), (1.0, 7.0, 0.9), (0.1, 0.2, 0.5)] {
            let tup = Tuple5 { x1: [0.3, 0.3], x3: [0.6, 0.6], t1: Time::Finite(t1), t3: Time::Finite(t3), lambda: l };
            let hc = harmonic_concavity_value(&g, &tup).unwrap().unwrap();
            assert!(hc.abs() < 1e-14, "{hc}");
        }
    }

    #[test]
    fn mixed_times_collapse_to_infinity() {
        let tup = Tuple5 { x1: [0.0; 2], x3: [1.0; 2], t1: Time::Finite(1.0), t3: Time::Infinity, lambda: 0.5 };
        assert_eq!(tup.times(), (Time::Infinity, Time::Infinity, Time::Infinity));
    }
}
