use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: malformed line: {msg}")]
    Malformed {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("{file}:{line}: {kind} id {id} out of range (size {size})")]
    IdOutOfRange {
        file: String,
        line: usize,
        kind: &'static str,
        id: usize,
        size: usize,
    },

    #[error("{file}: duplicate {what} {value:?}")]
    Duplicate {
        file: String,
        what: &'static str,
        value: String,
    },

    #[error("split-count mismatch for {what}: expected {expected}, found {found}")]
    CountMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("{kind} triple {triple} appears in both {first} and {second}")]
    SplitOverlap {
        kind: &'static str,
        triple: String,
        first: &'static str,
        second: &'static str,
    },

    #[error("empty concept text")]
    EmptyConceptText,

    #[error("invalid vector file: {0}")]
    VectorFile(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("missing threshold for {0}")]
    MissingThreshold(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),
}

/// Coarse category used for CLI exit codes and machine-readable error lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numeric,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::Data => "data",
            ErrorCategory::Numeric => "numeric",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numeric => 4,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Usage,
            Error::NonFinite(_) => ErrorCategory::Numeric,
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
