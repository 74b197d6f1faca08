use thiserror::Error;

/// Errors raised by the spectral solvers and their supporting numerics.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum SpectralError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A linear system is singular to working precision.
    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    /// An iterative method failed to converge.
    #[error("no convergence: {0}")]
    Convergence(String),

    /// A function evaluation produced a non-finite value.
    #[error("non-finite evaluation at x = {x}: {value}")]
    NonFinite { x: f64, value: f64 },

    /// Dimensions of operands do not agree.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, SpectralError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(SpectralError::Domain(msg.into()))
}
