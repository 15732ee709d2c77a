use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A position or amplitude was NaN or infinite.
    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),

    /// Two signals that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    /// A scenario broke one of its construction rules.
    #[error("scenario violation: {0}")]
    SpecViolation(String),

    /// The exchange projection kept finding violated constraint locations.
    /// Usually means the ball radius is too small relative to the grid
    /// resolution, or the merge radius is too coarse.
    #[error(
        "exchange projection did not become feasible after {rounds} rounds \
         (worst remaining violation {violation:e})"
    )]
    ExchangeDivergence { rounds: usize, violation: f64 },

    /// A structural parameter (step size, counts, tolerances) is invalid.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A numeric field failed to parse while reading a file.
    #[error("parse error ({context}): {message}")]
    Parse { context: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
