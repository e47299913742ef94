use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty target")]
    EmptyTarget,
    #[error("empty cloud")]
    EmptyCloud,
    #[error("empty region")]
    EmptyRegion,
    #[error("features required")]
    FeaturesRequired,
    #[error("misaligned flow: expected {expected} vectors, got {actual}")]
    MisalignedFlow { expected: usize, actual: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error on line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("malformed {kind}: {message}")]
    Format { kind: &'static str, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn format(kind: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            kind,
            message: message.into(),
        }
    }
}
