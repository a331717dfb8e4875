use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed or inconsistent input (bad dimensions, schema, tree shape).
    #[error("invalid input: {0}")]
    Invalid(String),
    /// An operation whose precondition requires a nonempty set got an empty one.
    #[error("empty input: {0}")]
    EmptyInput(String),
    /// A documented precondition of the operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Size guard exceeded for a desk-scale-only procedure.
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    /// Internal inconsistency; indicates a bug rather than a property of the input.
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
