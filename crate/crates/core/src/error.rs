use thiserror::Error;

/// Errors raised across the noise-modeling pipeline.
#[derive(Debug, Error)]
pub enum HpoError {
    /// Malformed or out-of-range input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two operands disagree on qubit count or vector length.
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The request would need exhaustive enumeration beyond the supported size.
    #[error("capacity exceeded: {what} supports n <= {limit}, got n = {n}; {hint}")]
    Capacity { what: &'static str, n: usize, limit: usize, hint: &'static str },

    /// A physical or structural validity check failed.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A caller broke an operation's contract (e.g. residual entries outside the mask).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A learned channel is too close to singular to invert.
    #[error("ill-conditioned model: condition number {condition:.3e} exceeds {limit:.1e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HpoError>;

pub(crate) fn invalid(msg: impl Into<String>) -> HpoError {
    HpoError::InvalidInput(msg.into())
}
