use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative numeric procedure failed to converge or find an admissible parameter.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The requested tolerance is below what double precision can certify.
    #[error("precision error: {0}")]
    Precision(String),
    /// An internal consistency check failed; indicates a bug or a counterexample.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
