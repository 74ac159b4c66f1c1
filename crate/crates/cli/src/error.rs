use sparse_spectra::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid configuration (exit 1).
    #[error("config error: {0}")]
    Config(String),
    /// An assertion suite or invariant check failed (exit 2).
    #[error("assertion failure: {0}")]
    Assertion(String),
    /// Dense cap, memory or file system limits (exit 3).
    #[error("resource limit: {0}")]
    Resource(String),
    /// Manifest written by another tool or schema version (exit 4).
    #[error("version mismatch: {0}")]
    Version(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Assertion(_) => 2,
            Self::Resource(_) => 3,
            Self::Version(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(m) => Self::Config(m),
            CoreError::ResourceLimit(m) => Self::Resource(m),
            other => Self::Assertion(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Resource(e.to_string())
    }
}
