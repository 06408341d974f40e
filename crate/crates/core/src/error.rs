use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigendecomposition of a {order}x{order} matrix did not converge within {max_iterations} iterations")]
    NoConvergence { order: usize, max_iterations: usize },

    #[error("matrix is singular (smallest shifted eigenvalue {min_eigenvalue:e}); increase the ridge to regularize")]
    Singular { min_eigenvalue: f64 },

    #[error("degenerate discriminant direction: class means coincide")]
    DegenerateDirection,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("no admissible subset found after {attempts} attempts")]
    ResampleExhausted { attempts: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
