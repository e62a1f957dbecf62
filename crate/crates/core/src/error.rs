use thiserror::Error;

/// Failure modes shared by every solver entry point.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input (dimension mismatch, bad parameter).
    #[error("instance error: {0}")]
    Instance(String),
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A documented precondition was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Request exceeds what the desk-scale algorithms support.
    #[error("capability error: {0}")]
    Capability(String),
    /// Numerical failure that should not happen on valid input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(expected: usize, got: usize) -> Error {
    Error::Instance(format!("dimension mismatch: expected {expected}, got {got}"))
}
