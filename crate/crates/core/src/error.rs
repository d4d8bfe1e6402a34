use thiserror::Error;

/// Errors produced by the tomography library.
#[derive(Debug, Error)]
pub enum TomoError {
    /// An argument was outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two operands disagree on the Hilbert-space dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A dense materialization was requested above the size guard.
    #[error("capacity exceeded: {what} needs n <= {limit}, got n = {n}")]
    Capacity {
        what: &'static str,
        n: u32,
        limit: u32,
    },

    /// A matrix that must be positive semidefinite has a negative eigenvalue
    /// beyond tolerance.
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below tolerance")]
    NotPsd { eigenvalue: f64 },

    /// A measurement-record or density-matrix file could not be parsed.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TomoError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(TomoError::InvalidInput(msg.into()))
}
