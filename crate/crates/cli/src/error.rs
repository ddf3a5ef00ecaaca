use thiserror::Error;

/// Failures of a CLI command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] aeroroi::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for bad or missing input data.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_config() => 2,
            CliError::Input(_) | CliError::Core(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
