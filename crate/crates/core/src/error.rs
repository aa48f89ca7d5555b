use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("non-increasing timestamps at row {row}")]
    NonIncreasingTimestamps { row: usize },

    #[error("non-finite value at row {row}")]
    NonFiniteValue { row: usize },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("no anchors")]
    NoAnchors,

    #[error("no transmitted samples; efficiency ratio undefined")]
    NothingTransmitted,

    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    #[error("wrong key length for {suite}: expected {expected} bytes, got {actual}")]
    KeyLength {
        suite: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("decryption failed: {0}")]
    Decrypt(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that indicate a bug in this crate rather than bad
    /// input data.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Integrity(_))
    }
}
