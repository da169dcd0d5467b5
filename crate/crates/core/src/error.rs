use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("payload size mismatch: header implies {expected} bytes, found {actual}")]
    PayloadSize { expected: usize, actual: usize },

    #[error("non-finite value at element {index}")]
    NonFinite { index: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Shape,
    Degenerate,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::BadMagic { .. }
            | Error::Header(_)
            | Error::PayloadSize { .. }
            | Error::NonFinite { .. } => ErrorKind::Io,
            Error::Shape(_) => ErrorKind::Shape,
            Error::Degenerate(_) => ErrorKind::Degenerate,
            Error::InvalidArgument(_) | Error::Domain(_) | Error::Unsupported(_) => {
                ErrorKind::Usage
            }
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

macro_rules! shape_err {
    ($($arg:tt)*) => { $crate::error::Error::Shape(format!($($arg)*)) };
}
pub(crate) use shape_err;
