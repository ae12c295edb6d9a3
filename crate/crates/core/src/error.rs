//! Crate-wide error type.
//!
//! Two broad classes matter to callers: validation errors (bad input, bad
//! configuration, malformed model specifications) and numerical failures
//! (singular systems, non-convergence). The CLI maps the former to exit
//! code 2 and the latter to exit code 3.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input data, configuration, or a model specification failed validation.
    #[error("validation: {0}")]
    Validation(String),

    /// A numerical routine could not complete (singularity, non-convergence).
    #[error("numerical: {0}")]
    Numerical(String),

    /// Underlying I/O failure (file system, CSV decoding).
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// CSV parsing failure with positional context.
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// Config file parsing failure.
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Build a validation error from anything printable.
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Build a numerical error from anything printable.
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True when the error should map to the CLI's validation exit code.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Config(_) | Error::Csv(_) | Error::Io(_)
        )
    }
}
