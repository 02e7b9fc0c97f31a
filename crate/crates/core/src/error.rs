use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch in {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("data asset {}: {detail}", path.display())]
    DataAsset { path: PathBuf, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("target BLER {target} is not bracketed by sweep '{sweep}'")]
    NotBracketed { target: f64, sweep: String },

    #[error("zero pilot energy, channel cannot be estimated")]
    ZeroPilotEnergy,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn length(what: &'static str, expected: usize, got: usize) -> Self {
        Error::LengthMismatch {
            what,
            expected,
            got,
        }
    }
}
