use credbond::PricingError;
use thiserror::Error;

/// Errors surfaced by the command layer, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Domain(#[from] PricingError),

    #[error("verification failed: {failed} of {total} checks did not pass")]
    Verification { failed: usize, total: usize, report: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Verification { .. } => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
