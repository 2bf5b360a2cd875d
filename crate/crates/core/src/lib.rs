//! Numerical laboratory for concavity properties of solutions to
//! `u_t − Δu = b(x,u,t)` with zero Dirichlet data on convex planar domains.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod bounds;
pub mod domain;
pub mod error;
pub mod io;
pub mod operators;
pub mod parabolic;
pub mod problem;
pub mod props;
pub mod scenarios;
pub mod stationary;

pub use error::{Error, Result};
