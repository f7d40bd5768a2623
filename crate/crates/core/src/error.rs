use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cannot measure speech power: signal is digital silence")]
    CannotMeasurePower,

    #[error("signal too short: {got_s:.3} s, need at least {need_s:.3} s")]
    TooShort { got_s: f64, need_s: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), msg: msg.into() }
    }

    /// Process exit code used by the `lvc` command line: 2 for invalid input,
    /// 3 for data errors (unreadable or inconsistent files).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::TooShort { .. } | Error::Degenerate(_) => 2,
            Error::CannotMeasurePower => 2,
            Error::Data(_) | Error::Format { .. } | Error::Io(_) | Error::Wav(_) | Error::Json(_) => 3,
        }
    }
}
