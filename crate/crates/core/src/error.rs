use thiserror::Error;

/// Failures raised by the simulation and estimation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate overflow at step {step}: |x| would exceed 2^62")]
    CoordinateOverflow { step: usize },

    #[error("trace exhausted; extend n (queried t = {t:e}, clock end C_n = {clock_end:e})")]
    TraceExhausted { t: f64, clock_end: f64 },

    #[error("horizon exhausted (queried t = {t:e}, V at horizon = {v_end:e})")]
    HorizonExhausted { t: f64, v_end: f64 },

    #[error("grid exhausted; extend n_grid (requested {requested:e}, covered [{lo:e}, {hi:e}])")]
    GridExhausted { requested: f64, lo: f64, hi: f64 },

    #[error("expected jump count {expected:e} exceeds 1e8; delta0 too small for the horizon")]
    TooManyJumps { expected: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("nonpositive sample value {0}")]
    NonPositiveSample(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
