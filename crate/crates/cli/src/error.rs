use robertson::Error as CoreError;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    /// 0 ok, 1 verify failure, 2 usage, 3 non-normalizable, 4 truncation.
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Verify(_) => 1,
            CliError::Core(CoreError::NonNormalizable(_)) => 3,
            CliError::Core(CoreError::Truncation { .. }) => 4,
            _ => 2,
        })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}
