use std::fmt;

/// Errors raised by the solver, diagnostics and experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A spectral field is not the transform of a real field.
    #[error("invalid field: {0}")]
    InvalidField(String),
    /// The integrated state contains NaN or infinity.
    #[error("non-finite state{}", OptTime(*.time))]
    NonFinite { time: Option<f64> },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("sweep member with L = {half_length} diverged at t = {time}")]
    SweepDivergence { half_length: f64, time: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

struct OptTime(Option<f64>);

impl fmt::Display for OptTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(t) => write!(f, " at t = {t}"),
            None => Ok(()),
        }
    }
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
