//! Error taxonomy for the whole pipeline.
//!
//! Every fallible operation returns [`Error`]; the CLI maps the variants onto
//! process exit codes (0 success, 1 usage/config, 2 data, 3 numeric
//! divergence).

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad invocation or configuration: unknown flags, unparsable config,
    /// out-of-range hyperparameters. Exit code 1.
    #[error("usage: {0}")]
    Usage(String),

    /// Problems with input data: missing or malformed files, series too short
    /// for the requested windows, degenerate (zero-variance) series,
    /// disconnected topologies. Exit code 2.
    #[error("data: {0}")]
    Data(String),

    /// Numeric divergence during training (non-finite loss or activations).
    /// Exit code 3.
    #[error("numeric: {0}")]
    Numeric(String),

    /// I/O failure wrapping the offending path. Exit code 2.
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code the CLI reports for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) => 1,
            Error::Data(_) | Error::Io { .. } => 2,
            Error::Numeric(_) => 3,
        }
    }
}
