use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: left is {left:?}, right is {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{0}: empty input")]
    Empty(&'static str),

    #[error("probability vector sums to {sum}, expected 1 within {tolerance}")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: record {record}: {message}")]
    Format { path: PathBuf, record: usize, message: String },

    #[error("{path}: at byte {offset}: {message}")]
    Corrupt { path: PathBuf, offset: usize, message: String },

    #[error("unknown scene id {0}")]
    UnknownScene(u64),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {error}", path.display())]
    File { path: PathBuf, error: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, record: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            record,
            message: message.into(),
        }
    }

    /// Tags an I/O failure with the file it concerns.
    pub(crate) fn file(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
        move |error| Error::File {
            path: path.to_path_buf(),
            error,
        }
    }
}
