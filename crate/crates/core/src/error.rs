use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or truncated input file.
    #[error("format error: {0}")]
    Format(String),

    /// Well-formed input that uses a feature this crate does not read.
    #[error("unsupported format: {0}")]
    Unsupported(String),

    /// Caller-side contract violation: shapes, ranges, empty inputs.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error: {0}")]
    Config(String),

    /// Error raised inside one module of a multi-stage run.
    #[error("[{module}] {source}")]
    Stage {
        module: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("repeat {repeat}: {source}")]
    Repeat {
        repeat: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Tags an error with the module it came from.
    pub fn in_module(module: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| match e {
            tagged @ Error::Stage { .. } => tagged,
            other => Error::Stage {
                module,
                source: Box::new(other),
            },
        }
    }

    /// The error with any module tags removed.
    pub fn untagged(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.untagged(),
            other => other,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
