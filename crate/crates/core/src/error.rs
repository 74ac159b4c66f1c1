use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
