//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by planning, certification and I/O entry points.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a documented precondition (lengths, signs,
    /// monotonicity, ...).  The message names the offending field.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The conic solver stopped without an optimal status.
    #[error("conic solver did not converge: {0:?}")]
    Solver(crate::conic::Status),

    /// A numerical routine left its domain (NaN, nonpositive pivot, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
