use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the workbench.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or non-finite input parameter.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Caller violated an operation contract (shape mismatch, stale cache, empty input).
    #[error("contract error: {0}")]
    Contract(String),

    /// Configuration is invalid (unknown key, bad value, unsupported grid).
    #[error("configuration error: {0}")]
    Config(String),

    /// The pressure system has no unique solution.
    #[error("ill-posed pressure system: {0}")]
    WellPosedness(String),

    /// A numerical procedure failed (non-finite value, solver stall).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed binary file.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Binary file written by an unsupported format version.
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::WellPosedness(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
