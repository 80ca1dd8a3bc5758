use thiserror::Error;

/// Construction and coordinate errors for the shared domain types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid gaussian: {0}")]
    InvalidGaussian(String),
    #[error("invalid anchor: {0}")]
    InvalidAnchor(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}
