//! CLI error taxonomy mapped onto process exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 2: the configuration is unreadable or invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Exit code 3: a verb ran before its inputs exist.
    #[error("prerequisite missing: {0}")]
    Prerequisite(String),

    /// Exit code 4: training or search produced non-finite numbers.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Exit code 1: anything else (I/O, serialization).
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Prerequisite(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl From<sharpshooter::Error> for CliError {
    fn from(e: sharpshooter::Error) -> Self {
        match e {
            sharpshooter::Error::Numeric { .. } | sharpshooter::Error::Diverged { .. } => {
                CliError::Numeric(e.to_string())
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(format!("serialization error: {e}"))
    }
}
