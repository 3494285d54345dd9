//! Error type shared by every module in the crate.
//!
//! Variants are grouped by how a caller should react: `Parse`/`Io` indicate a
//! problem with input data, `InvalidParameter` a violated precondition, and
//! `Numerical` a runtime failure of a numerical routine (singular input,
//! non-convergence, an empty proximity matrix, ...). The CLI maps these groups
//! onto distinct exit codes.

use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// Underlying I/O failure, annotated with the path being touched.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input data (edge list, label file, schedule file, ...).
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numerical routine could not produce a meaningful result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Internal invariant violated; indicates a bug in this crate.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Convenience constructor for I/O errors with path context.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Convenience constructor for parse errors with location context.
    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
