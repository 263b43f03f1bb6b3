use std::path::Path;
use std::process::ExitCode;

use rollfly_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Io(String),
    #[error("replay mismatch: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Mismatch(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 4,
        })
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if e.is_infeasible() {
            return CliError::Infeasible(e.to_string());
        }
        match e {
            CoreError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
