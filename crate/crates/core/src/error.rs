use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("interval index {index} out of range for a mesh with {intervals} intervals")]
    IntervalOutOfRange { index: usize, intervals: usize },

    #[error("refinement factor must be at least {min}, got {factor}")]
    InvalidFactor { factor: usize, min: usize },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Newton iteration did not converge on interval {interval} (residual {residual:e})")]
    NewtonDiverged { interval: usize, residual: f64 },

    #[error("right-hand side is singular at t = {time}")]
    SingularRhs { time: f64 },

    #[error("non-finite value produced at t = {time}")]
    NonFinite { time: f64 },

    #[error("singular linear system")]
    SingularMatrix,

    #[error("time {time} lies outside (0, {horizon}]")]
    TimeOutOfRange { time: f64, horizon: f64 },

    #[error("event occurrence {wanted} not found (only {found} crossings)")]
    EventNotFound { wanted: usize, found: usize },

    #[error("degenerate error-estimate denominator {value:e}")]
    DegenerateDenominator { value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sample failure rate {rate:.4} exceeds the allowed {allowed:.4} ({failures} of {attempts} attempts); last failure: {last}")]
    FailureRate {
        rate: f64,
        allowed: f64,
        failures: usize,
        attempts: usize,
        last: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Failures that invalidate one sample but not the run: the driver redraws.
    pub fn is_sample_failure(&self) -> bool {
        matches!(
            self,
            Error::NewtonDiverged { .. }
                | Error::SingularRhs { .. }
                | Error::NonFinite { .. }
                | Error::SingularMatrix
                | Error::EventNotFound { .. }
                | Error::DegenerateDenominator { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
