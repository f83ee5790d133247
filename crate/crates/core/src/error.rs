use thiserror::Error;

/// Errors raised by the distance, classification, bounds and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sequence too short: need at least {required} points, got {found}")]
    TooShort { required: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("operation requires scalar data, got dimension {0}")]
    NotScalar(usize),

    #[error("non-positive variance {0}")]
    NonPositiveVariance(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("need at least {required} {what}, got {found}")]
    TooFew {
        what: &'static str,
        required: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient points for exponent fit: need 3 with positive error, got {0}")]
    InsufficientFitPoints(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
