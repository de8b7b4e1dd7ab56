// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

/// Errors surfaced by the library.
///
/// The CLI maps [`Error::is_validation`] errors to exit code 1 and everything
/// else to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Self::Validation(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (configs, arguments).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Self::Domain(_) | Self::Parse { .. } | Self::Validation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
