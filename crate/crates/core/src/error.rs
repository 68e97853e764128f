use thiserror::Error;

/// Errors raised by the library. Parameter vectors are reported as `f64`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter {theta:?} lies outside the parameter box")]
    Domain { theta: Vec<f64> },

    #[error(
        "grid too narrow: mass {mass:e} on the outermost cells exceeds {limit:e}; use a wider grid"
    )]
    GridTooNarrow { mass: f64, limit: f64 },

    #[error("non-finite value at theta {theta:?}")]
    NonFinite { theta: Vec<f64> },

    #[error("MLE did not converge after {iterations} iterations (last theta {theta:?}): {reason}")]
    NonConvergence {
        iterations: usize,
        theta: Vec<f64>,
        reason: String,
    },

    #[error("MLE not unique: multi-start optima differ by {spread:e} (optima {optima:?})")]
    NonUnique { spread: f64, optima: Vec<Vec<f64>> },

    #[error("curvature matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error(
        "sampler failed to mix: acceptance rate {rate:.4} outside [{lo}, {hi}] after adaptation"
    )]
    Mixing { rate: f64, lo: f64, hi: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("density is not positive at node {node:?}")]
    NonPositiveDensity { node: Vec<f64> },

    #[error("moment of order {order} is not finite")]
    NonFiniteMoment { order: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration problems are detected before any numerical work.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidArgument(_) | Error::Parse(_) | Error::Io(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
