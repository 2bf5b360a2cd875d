//! Matrix-free discrete Laplacian, shifted Poisson solves, and the principal
//! Dirichlet eigenpair.
//!
//! Near curved boundaries the stencil uses the cut fraction `θ` of each arm:
//! the missing neighbor is replaced by the linear extrapolation that vanishes
//! on the boundary, which adds `1/(θh²)` to the diagonal and keeps the
//! operator symmetric. On grid-aligned rectangles every `θ` equals one and
//! the stencil is the plain 5-point Laplacian.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DiscretizedDomain, Neighbor};
use crate::error::{Error, Result};

/// Time stamp of a field: a finite time or the stationary slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Time {
    Finite(f64),
    Infinity,
}

impl Time {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Time::Infinity)
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Time::Finite(t) => *t,
            Time::Infinity => f64::INFINITY,
        }
    }
}

/// One value per interior node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub values: Vec<f64>,
    pub time: Time,
}

impl Field {
    pub fn new(values: Vec<f64>, time: Time) -> Self {
        Field { values, time }
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const CHUNK: usize = 2048;

/// Inner product with a fixed chunked summation order, independent of the thread count.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

/// `(−Δ_h u)` at every interior node.
pub fn apply_neg_laplacian(dom: &DiscretizedDomain, u: &[f64], out: &mut [f64]) {
    let inv_h2 = 1.0 / (dom.h * dom.h);
    out.par_iter_mut().enumerate().with_min_len(512).for_each(|(k, o)| {
        let uk = u[k];
        let mut acc = 0.0;
        for nb in &dom.stencils[k] {
            match *nb {
                Neighbor::Node(j) => acc += uk - u[j],
                Neighbor::Cut(theta) => acc += uk / theta,
            }
        }
        *o = acc * inv_h2;
    });
}

/// `Δ_h f` as a new field.
pub fn apply_laplacian(dom: &DiscretizedDomain, f: &Field) -> Field {
    let mut out = vec![0.0; f.values.len()];
    apply_neg_laplacian(dom, &f.values, &mut out);
    out.iter_mut().for_each(|v| *v = -*v);
    Field::new(out, f.time)
}

/// Diagonal of `−Δ_h`.
pub fn neg_laplacian_diagonal(dom: &DiscretizedDomain) -> Vec<f64> {
    let inv_h2 = 1.0 / (dom.h * dom.h);
    dom.stencils
        .iter()
        .map(|st| {
            st.iter()
                .map(|nb| match *nb {
                    Neighbor::Node(_) => 1.0,
                    Neighbor::Cut(theta) => 1.0 / theta,
                })
                .sum::<f64>()
                * inv_h2
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual target `‖r‖/‖rhs‖`.
    pub tol: f64,
    /// Jacobi preconditioning.
    pub precondition: bool,
    /// Iteration cap as a multiple of the unknown count.
    pub max_iter_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, precondition: true, max_iter_factor: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Achieved `‖r‖₂/‖rhs‖₂`.
    pub residual: f64,
}

/// Diagonal part `D` of the operator `D + τ(−Δ_h)`.
#[derive(Debug, Clone, Copy)]
pub enum Mass<'a> {
    Scalar(f64),
    Diagonal(&'a [f64]),
}

impl Mass<'_> {
    fn at(&self, k: usize) -> f64 {
        match self {
            Mass::Scalar(c) => *c,
            Mass::Diagonal(d) => d[k],
        }
    }
}

/// Solves `(D + τ(−Δ_h))u = rhs` by (preconditioned) conjugate gradients.
pub fn solve_system(
    dom: &DiscretizedDomain,
    mass: Mass<'_>,
    tau: f64,
    rhs: &[f64],
    x0: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    let n = rhs.len();
    let lap_diag = neg_laplacian_diagonal(dom);
    let inv_diag: Vec<f64> = (0..n).map(|k| 1.0 / (mass.at(k) + tau * lap_diag[k])).collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        apply_neg_laplacian(dom, x, out);
        out.par_iter_mut()
            .enumerate()
            .with_min_len(512)
            .for_each(|(k, o)| *o = mass.at(k) * x[k] + tau * *o);
    };
    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return Ok(SolveOutcome { solution: vec![0.0; n], iterations: 0, residual: 0.0 });
    }
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let precond = |r: &[f64]| -> Vec<f64> {
        if opts.precondition {
            r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect()
        } else {
            r.to_vec()
        }
    };
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = opts.max_iter_factor * n.max(1);
    let mut res = dot(&r, &r).sqrt() / b_norm;
    let mut it = 0;
    while res > opts.tol {
        if it >= max_iter {
            return Err(Error::MaxIterations { iterations: it, residual: res });
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        res = dot(&r, &r).sqrt() / b_norm;
        it += 1;
        if res <= opts.tol {
            break;
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Ok(SolveOutcome { solution: x, iterations: it, residual: res })
}

/// Solves `(I + τ(−Δ_h))u = rhs`.
pub fn solve_shifted_poisson(dom: &DiscretizedDomain, tau: f64, rhs: &Field) -> Result<Field> {
    if !(tau > 0.0) {
        return Err(Error::RangeViolation(format!("tau must be positive, got {tau}")));
    }
    let out = solve_system(dom, Mass::Scalar(1.0), tau, &rhs.values, None, &SolverOptions::default())?;
    Ok(Field::new(out.solution, rhs.time))
}

/// Solves `−Δ_h u = rhs`.
pub fn solve_poisson(dom: &DiscretizedDomain, rhs: &[f64], x0: Option<&[f64]>, tol: f64) -> Result<SolveOutcome> {
    let opts = SolverOptions { tol, ..SolverOptions::default() };
    solve_system(dom, Mass::Scalar(0.0), 1.0, rhs, x0, &opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda: f64,
    pub phi: Field,
    pub iterations: usize,
    /// `‖(−Δ_h)φ − λφ‖_∞`.
    pub residual: f64,
}

/// Principal eigenpair of `−Δ_h` by inverse power iteration, `φ₁ > 0`, `‖φ₁‖_∞ = 1`.
pub fn principal_eigenpair(dom: &DiscretizedDomain) -> Result<EigenPair> {
    let n = dom.n_unknowns();
    if n < 4 {
        return Err(Error::RangeViolation("eigenpair needs at least 4 interior nodes".into()));
    }
    let mut x: Vec<f64> = (0..n).map(|k| dom.node_distance(k)).collect();
    let scale = sup_norm(&x);
    x.iter_mut().for_each(|v| *v /= scale);
    let mut ax = vec![0.0; n];
    let mut lambda_old = f64::INFINITY;
    let mut last_change = f64::INFINITY;
    for it in 1..=500 {
        let y = solve_poisson(dom, &x, Some(&x), 1e-13)?.solution;
        let s = sup_norm(&y);
        x = y.iter().map(|v| v / s).collect();
        apply_neg_laplacian(dom, &x, &mut ax);
        let lambda = dot(&x, &ax) / dot(&x, &x);
        let residual = ax.iter().zip(&x).fold(0.0f64, |m, (a, v)| m.max((a - lambda * v).abs()));
        last_change = (lambda - lambda_old).abs();
        lambda_old = lambda;
        if last_change <= 1e-10 && residual <= 1e-8 * lambda {
            if x.iter().any(|&v| v <= 0.0) {
                return Err(Error::NoConvergence { iterations: it, change: last_change });
            }
            return Ok(EigenPair { lambda, phi: Field::new(x, Time::Infinity), iterations: it, residual });
        }
    }
    Err(Error::NoConvergence { iterations: 500, change: last_change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use std::f64::consts::PI;

    fn square(h: f64) -> DiscretizedDomain {
        DiscretizedDomain::build(DomainSpec::UnitSquare, h).unwrap()
    }

    fn sample(dom: &DiscretizedDomain, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..dom.n_unknowns()).map(|k| {
            let p = dom.node(k);
            f(p[0], p[1])
        }).collect()
    }

    #[test]
    fn constant_field_has_zero_laplacian_at_full_interior_nodes() {
        let dom = square(1.0 / 16.0);
        let f = Field::new(vec![3.0; dom.n_unknowns()], Time::Finite(0.0));
        let lap = apply_laplacian(&dom, &f);
        for k in 0..dom.n_unknowns() {
            if dom.is_full_interior(k) {
                assert!(lap.values[k].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn quadratic_is_reproduced_exactly() {
        let dom = square(1.0 / 16.0);
        let f = Field::new(sample(&dom, |x, y| x * x + y * y), Time::Finite(0.0));
        let lap = apply_laplacian(&dom, &f);
        for k in 0..dom.n_unknowns() {
            if dom.is_full_interior(k) {
                assert!((lap.values[k] - 4.0).abs() < 1e-9, "{}", lap.values[k]);
            }
        }
    }

    #[test]
    fn sine_mode_is_second_order() {
        let mut errs = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let dom = square(h);
            let f = sample(&dom, |x, y| (PI * x).sin() * (PI * y).sin());
            let lap = apply_laplacian(&dom, &Field::new(f.clone(), Time::Finite(0.0)));
            let err = lap.values.iter().zip(&f).fold(0.0f64, |m, (l, v)| m.max((l + 2.0 * PI * PI * v).abs()));
            errs.push(err);
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[0] / errs[1] < 4.5, "{errs:?}");
    }

    #[test]
    fn shifted_poisson_examples() {
        let dom = square(1.0 / 32.0);
        let zero = Field::new(vec![0.0; dom.n_unknowns()], Time::Finite(0.0));
        assert!(solve_shifted_poisson(&dom, 0.1, &zero).unwrap().values.iter().all(|&v| v == 0.0));
        let tau = 0.01;
        let exact = sample(&dom, |x, y| (PI * x).sin() * (PI * y).sin());
        let rhs: Vec<f64> = exact.iter().map(|v| (1.0 + 2.0 * tau * PI * PI) * v).collect();
        let u = solve_shifted_poisson(&dom, tau, &Field::new(rhs.clone(), Time::Finite(0.0))).unwrap();
        let err = u.values.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 5e-3, "{err}");
        let out = solve_system(&dom, Mass::Scalar(1.0), tau, &rhs, None, &SolverOptions::default()).unwrap();
        assert!(out.residual <= 1e-10);
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let dom = square(1.0 / 32.0);
        let rhs = vec![1.0; dom.n_unknowns()];
        let opts = SolverOptions { tol: 1e-300, precondition: false, max_iter_factor: 0 };
        let err = solve_system(&dom, Mass::Scalar(0.0), 1.0, &rhs, None, &opts).unwrap_err();
        assert!(matches!(err, Error::MaxIterations { iterations: 0, .. }));
    }

    #[test]
    fn square_eigenvalue() {
        let dom = square(1.0 / 32.0);
        let e = principal_eigenpair(&dom).unwrap();
        // Oracle: the discrete 5-point eigenvalue (8/h²)·sin²(πh/2) on the square.
        let h: f64 = 1.0 / 32.0;
        let discrete = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((e.lambda - discrete).abs() < 1e-8, "{} vs {discrete}", e.lambda);
        assert!(e.phi.values.iter().all(|&v| v > 0.0));
        assert!((e.phi.sup_norm() - 1.0).abs() < 1e-15);
        assert!(e.residual <= 1e-8 * e.lambda);
    }

    #[test]
    fn disk_eigenvalue_converges_to_bessel_zero() {
        let dom = DiscretizedDomain::build(DomainSpec::Disk { radius: 1.0 }, 1.0 / 32.0).unwrap();
        let e = principal_eigenpair(&dom).unwrap();
        let j01: f64 = 2.404_825_557_695_773;
        assert!((e.lambda / (j01 * j01) - 1.0).abs() < 0.02, "{}", e.lambda);
    }

    #[test]
    fn tiny_domain_is_rejected() {
        let dom = DiscretizedDomain::build(DomainSpec::Disk { radius: 1.0 }, 0.9).unwrap();
        assert_eq!(dom.n_unknowns(), 3);
        assert!(principal_eigenpair(&dom).is_err());
    }
}
