use thiserror::Error;

/// Errors raised across the identification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: {0}")]
    Range(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("undefined Strouhal number: mach must be positive")]
    UndefinedStrouhal,
    #[error("Mach scaling requires mach > 0, got {0}")]
    MachScaling(f64),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// True for errors caused by bad parameters or configuration files, as
    /// opposed to bad input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Toml(_) | Error::MachScaling(_) | Error::UndefinedStrouhal)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
