//! Crate-wide error type.

use std::path::PathBuf;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {actual}")]
    Shape {
        op: &'static str,
        expected: String,
        actual: String,
    },

    /// A configuration value violates its contract. `key` names the offending field.
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: &'static str, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    /// Replay data (partition, aux support) does not belong to the forward pass it was paired with.
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            op,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn config(key: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            key,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Binary file decoding failures. Every variant names the byte offset where decoding stopped.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic at byte offset {offset}: expected {expected:?}")]
    BadMagic { offset: usize, expected: &'static str },

    #[error("truncated input at byte offset {offset}: needed {needed} more bytes, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("dimension overflow at byte offset {offset}: {rows} x {cols}")]
    DimensionOverflow { offset: usize, rows: u64, cols: u64 },

    #[error("unknown mode tag {tag} at byte offset {offset}")]
    BadModeTag { offset: usize, tag: u8 },

    #[error("invalid metadata at byte offset {offset}: {reason}")]
    BadMetadata { offset: usize, reason: String },

    #[error("{extra} trailing bytes at byte offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
}

impl FormatError {
    /// Short stable class name, used by the CLI and FFI to report errors.
    pub fn class(&self) -> &'static str {
        match self {
            FormatError::BadMagic { .. } => "bad-magic",
            FormatError::Truncated { .. } => "truncated",
            FormatError::DimensionOverflow { .. } => "dimension-overflow",
            FormatError::BadModeTag { .. } => "bad-mode-tag",
            FormatError::BadMetadata { .. } => "bad-metadata",
            FormatError::TrailingBytes { .. } => "trailing-bytes",
        }
    }

    pub fn offset(&self) -> usize {
        match *self {
            FormatError::BadMagic { offset, .. }
            | FormatError::Truncated { offset, .. }
            | FormatError::DimensionOverflow { offset, .. }
            | FormatError::BadModeTag { offset, .. }
            | FormatError::BadMetadata { offset, .. }
            | FormatError::TrailingBytes { offset, .. } => offset,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
