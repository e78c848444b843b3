use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the dictionary-generation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("rank deficient design: {0}")]
    RankDeficient(String),

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
