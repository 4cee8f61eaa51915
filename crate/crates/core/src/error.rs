//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by construction, factorization, and solver routines.
#[derive(Error, Debug, Clone)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite: nonpositive pivot at index {pivot}")]
    NotPositiveDefinite { pivot: usize },

    #[error("need at least {required} points for order {order}, got {got}")]
    TooFewPoints {
        required: usize,
        order: usize,
        got: usize,
    },

    #[error("problem size {got} exceeds the dense-path cap of {cap}")]
    SizeCap { cap: usize, got: usize },

    #[error("evaluation point {x} is outside [0, 1]")]
    OutOfDomain { x: f64 },

    #[error("solver did not converge within {iterations} iterations ({detail})")]
    NotConverged { iterations: usize, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
