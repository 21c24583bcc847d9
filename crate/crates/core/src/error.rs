use std::path::PathBuf;

/// Errors produced by the encryption toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter, geometry or permutation failed validation.
    #[error("validation: {0}")]
    Validation(String),

    /// A ciphertext was presented with a key other than the one that produced it.
    #[error("key mismatch: ciphertext fingerprint {found}, key fingerprint {expected}")]
    KeyMismatch { expected: String, found: String },

    /// A key or permutation file could not be parsed.
    #[error("parse error in field `{field}`: {msg}")]
    Parse { field: String, msg: String },

    /// Malformed dataset or image bytes.
    #[error("format: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::KeyMismatch { .. } => "key-mismatch",
            Error::Parse { .. } => "parse",
            Error::Format(_) => "format",
            Error::Io { .. } => "io",
        }
    }
}
