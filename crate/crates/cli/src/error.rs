//! Command errors and their exit codes.

use crate::io::IoError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or command line: exit 1.
    #[error("config error: {0}")]
    Config(String),
    /// Unreadable or malformed input files: exit 1.
    #[error("input error: {0}")]
    Input(#[from] IoError),
    /// Divergence or another numerical failure: exit 2.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// One or more validation checks failed: exit 3.
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

/// Core errors raised while building a problem or plan are configuration
/// mistakes; divergence during a run is numerical.
impl From<saga_core::Error> for CliError {
    fn from(e: saga_core::Error) -> Self {
        match e {
            saga_core::Error::NumericalDivergence { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
