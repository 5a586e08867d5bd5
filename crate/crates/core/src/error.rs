use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("operands live on different domains")]
    DomainMismatch,

    #[error("inadmissible regime: {0}")]
    Inadmissible(String),

    #[error("solver diverged at step {step} (t = {time}): |v|_H = {norm:e}")]
    Diverged { step: usize, time: f64, norm: f64 },

    #[error("time {time} is outside the noise window [{start}, {end}]")]
    OutOfWindow { time: f64, start: f64, end: f64 },

    #[error("history horizon {horizon} too short: weight is {weight:e} at its left end")]
    HorizonTooShort { horizon: f64, weight: f64 },

    #[error("class check needs at least {needed} horizons, got {got}")]
    InsufficientHorizons { needed: usize, got: usize },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl Error {
    /// Rejected input, as opposed to a failure during computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParameter { .. } | Error::Inadmissible(_) | Error::TomlDe(_)
        )
    }
}
