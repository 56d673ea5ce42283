use thiserror::Error;

/// Errors raised by the estimation, simulation and experiment layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid series length {0}: must be at least 1")]
    InvalidLength(usize),

    #[error("enumeration of scans for n = {n} exceeds the cap of {cap}")]
    Capacity { n: usize, cap: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("insufficient sample: {retained} usable points out of {requested} requested ({reason})")]
    InsufficientSample {
        retained: usize,
        requested: usize,
        reason: &'static str,
    },

    #[error("degenerate regression design: {0}")]
    DegenerateDesign(&'static str),

    #[error("slope {slope} lies outside the domain of map `{map}` and no clip is configured")]
    OutOfDomain { map: String, slope: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("autoregressive coefficient {0} is not stationary (|rho| must be < 1)")]
    Nonstationary(f64),

    #[error("{failed} of {total} {what} failed (limit {limit})")]
    TooManyFailures {
        what: &'static str,
        failed: usize,
        total: usize,
        limit: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
