use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid spacing {h} leaves no interior nodes")]
    NoInteriorNodes { h: f64 },
    #[error("polygon vertices are not convex and counterclockwise")]
    NonConvexPolygon,
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point is a polygon vertex; the normal is ambiguous")]
    VertexAmbiguity,
    #[error("point is not on the boundary (signed distance {0:e})")]
    NotOnBoundary(f64),
    #[error("negative state {0:e}")]
    NegativeState(f64),
    #[error("conjugate gradient stopped after {iterations} iterations at relative residual {residual:e}")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("no convergence after {iterations} iterations (last change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("state blew up at t = {time}: sup norm {norm:e}")]
    StateBlowup { time: f64, norm: f64 },
    #[error("point outside the evaluation domain")]
    OutOfDomain,
    #[error("nonpositive value {0:e} under a logarithmic or negative-power transform")]
    NonpositiveValue(f64),
    #[error("sampler produced no candidate tuples")]
    EmptySampler,
    #[error("hull is degenerate: need at least {0} affinely independent points")]
    HullDegenerate(usize),
    #[error("parameter out of range: {0}")]
    RangeViolation(String),
    #[error("precondition failed: {0}")]
    ValidityViolation(String),
    #[error("supremum diverges")]
    Unbounded,
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
