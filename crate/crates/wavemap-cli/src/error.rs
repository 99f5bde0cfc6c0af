use thiserror::Error;

/// Failures of a run, each with its process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("numerical guard: {0}")]
    Guard(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn status(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<wavemap::Error> for CliError {
    fn from(e: wavemap::Error) -> Self {
        match e {
            wavemap::Error::Io(_) | wavemap::Error::Json(_) => CliError::Io(e.to_string()),
            e if e.is_numerical_guard() => CliError::Guard(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
