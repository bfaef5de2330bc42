use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state {state} outside [0, {max}]")]
    StateOutOfRange { state: u64, max: u64 },

    #[error("operation requires r > 1 (X* undefined for r = {r})")]
    NotSupercritical { r: f64 },

    #[error("metastable window too small: X* = {x_star}, need at least {needed}")]
    WindowTooSmall { x_star: u64, needed: u64 },

    #[error("conditioning on a null event at state {state}")]
    NullConditioning { state: u64 },

    #[error("too much censoring: {censored} of {total} runs hit the time cap")]
    ExcessiveCensoring { censored: usize, total: usize },

    #[error("regime violation for {case}: {reason}")]
    RegimeViolation { case: String, reason: String },

    #[error("unknown case id `{0}`")]
    UnknownCase(String),

    #[error("empty sample")]
    EmptySample,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
