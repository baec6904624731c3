use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pillar {index}: times must be strictly increasing and after the valuation time")]
    NonIncreasingTimes { index: usize },

    #[error("pillar at t={time}: discount factor must be positive and finite, got {df}")]
    NonPositiveDf { time: f64, df: f64 },

    #[error("time {time} is outside the curve span [{start}, {end}]")]
    OutOfSpan { time: f64, start: f64, end: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid quote: {0}")]
    InvalidQuote(String),

    #[error("duplicate quote end date {0}")]
    DuplicateQuote(f64),

    #[error("calibration residual {residual:e} at t={time} exceeds {tolerance:e}")]
    Calibration {
        time: f64,
        residual: f64,
        tolerance: f64,
    },

    #[error("{0}")]
    Unsupported(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
