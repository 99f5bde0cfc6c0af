use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside chart domain: |x|_1 = {norm} exceeds radius {radius}")]
    OutsideDomain { norm: f64, radius: f64 },

    #[error("series coefficient violates certificate: {0}")]
    SeriesBound(String),

    #[error("blowup guard tripped at (u, v) = ({u}, {v}): derivative size {value}")]
    Blowup { u: f64, v: f64, value: f64 },

    #[error("picard iteration diverged at step {step} (ratio {ratio})")]
    Divergence { step: usize, ratio: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for guards that signal a numerical event rather than bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, Error::Blowup { .. } | Error::Divergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
