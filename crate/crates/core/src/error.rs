use thiserror::Error;

use crate::bench::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid axis: {0}")]
    InvalidAxis(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sampling violation: {0}")]
    SamplingViolation(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("paraxial violation: p_max {p_max:.4e} rad/m must stay below {limit:.4e} rad/m")]
    ParaxialViolation { p_max: f64, limit: f64 },
    #[error("mode axes of the two arms differ")]
    ModeAxisMismatch,
    #[error("pattern is identically zero")]
    EmptyPattern,
    #[error("no weighted mode has a partner on the mode grid (epsilon = {0})")]
    PairingOutOfRange(f64),
    #[error("fewer than 3 interior maxima (found {0})")]
    NoFringes(usize),
    #[error("detector not supported here: {0}")]
    UnsupportedDetector(String),
    #[error("observables in the family do not commute")]
    NonCommutingFamily,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("channel is not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),
    #[error("state is not maximally entangled")]
    NotMaximallyEntangled,
    #[error("partial-transpose test needs 2x2, 2x3 or 3x2 (got {0}x{1})")]
    DimUnsupported(usize, usize),
    #[error("weights do not form a probability distribution")]
    InvalidDistribution,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Numeric guards are reported separately from input errors by the CLI.
    pub fn is_numeric_guard(&self) -> bool {
        matches!(
            self,
            Error::SamplingViolation(_) | Error::ParaxialViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
