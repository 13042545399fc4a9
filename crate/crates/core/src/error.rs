use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Variants are grouped so that a front end can map them onto distinct exit
/// codes: [`Error::kind`] returns the coarse class.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("io: {0}")]
    Stream(#[from] std::io::Error),

    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate evaluation sample id {id:?} at line {line}")]
    DuplicateSample { id: String, line: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("index file: {0}")]
    IndexFormat(String),

    #[error("configuration mismatch: {0}")]
    Config(String),

    #[error("sample {id:?}: {message}")]
    Format { id: String, message: String },

    #[error("document id collision: {0:?}")]
    IdCollision(String),
}

/// Coarse error classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Data,
    Param,
    Config,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } | Error::Stream(_) => ErrorKind::Io,
            Error::InvalidUtf8 { .. }
            | Error::Parse { .. }
            | Error::DuplicateSample { .. }
            | Error::IndexFormat(_)
            | Error::Format { .. }
            | Error::IdCollision(_) => ErrorKind::Data,
            Error::Param(_) => ErrorKind::Param,
            Error::Config(_) => ErrorKind::Config,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
