use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: byte offset {offset}: {message}")]
    Binary {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("{path}: empty embedding file")]
    EmptyFile { path: PathBuf },

    #[error("invalid lexicon: {field}: {message}")]
    Lexicon { field: String, message: String },

    #[error("lexicon resolution failed: {0}")]
    Resolution(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("word not in vocabulary: {0}")]
    OutOfVocabulary(String),

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("store must be length-normalized before {0}")]
    NotNormalized(&'static str),

    #[error("empty null space: {0}")]
    EmptyNullSpace(String),

    #[error("report serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for bad inputs, 1 for failures during computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Binary { .. }
            | Error::EmptyFile { .. }
            | Error::Lexicon { .. }
            | Error::Resolution(_)
            | Error::InvalidInput(_) => 2,
            _ => 1,
        }
    }
}
