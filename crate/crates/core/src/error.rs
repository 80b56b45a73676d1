use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),
    /// A problem would exceed the configured qubit cap.
    #[error("resource error: {0}")]
    Resource(String),
    /// An iterative method failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A polynomial or block encoding does not satisfy the transform contract.
    #[error("contract error: {0}")]
    Contract(String),
    /// A lower-bound or reduction instance could not be built.
    #[error("construction error: {0}")]
    Construction(String),
    /// An estimate is too close to zero for the derived quantity to be trusted.
    #[error("unreliable estimate: {0}")]
    UnreliableEstimate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
