//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by construction, solvers, samplers and the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("symbol {symbol} outside alphabet of size {alphabet_size}")]
    OutOfAlphabet { symbol: usize, alphabet_size: usize },

    #[error(
        "output symbol {symbol} has positive source probability but is unreachable \
         through the channel; the exponent is infinite"
    )]
    Unreachable { symbol: usize },

    #[error("the requested moment is infinite: {0}")]
    InfiniteMoment(String),

    #[error("solver did not converge within {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("horizon too small for requested accuracy: {0}")]
    HorizonTooSmall(String),

    #[error("verification failed: {failed} of {total} checks")]
    VerificationFailed { failed: usize, total: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 0 ok, 1 input error, 2 infinite
    /// exponent/moment, 3 non-convergence, 4 verification failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Unreachable { .. } | Error::InfiniteMoment(_) => 2,
            Error::NonConvergence { .. } => 3,
            Error::VerificationFailed { .. } => 4,
            _ => 1,
        }
    }
}
