//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by precoders, the analysis layer and the sweep engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions are invalid or inconsistent.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The channel realization is numerically degenerate (rank deficient,
    /// zero row power, ...).
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// A problem instance exceeds a hard guard rail (e.g. exhaustive search
    /// over `4^B` candidates).
    #[error("problem size exceeds guard rail: {0}")]
    SizeLimit(String),

    /// An iterative solver stopped without reaching its tolerance.
    #[error("solver did not converge: {0}")]
    SolverNonConvergence(String),

    /// Invalid sweep configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// I/O failure while reading configuration or writing results.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
