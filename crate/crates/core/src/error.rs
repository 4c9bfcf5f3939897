use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("degenerate time t = {t}: G(t) = {big_g:e} is below the floor {floor:e}")]
    DegenerateTime { t: f64, big_g: f64, floor: f64 },

    #[error("schedule inconsistency at t = {t}: negative radicand {radicand:e}")]
    ScheduleInconsistency { t: f64, radicand: f64 },

    #[error("empty batch")]
    EmptyBatch,

    #[error("step index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("stft configuration rejected: {0}")]
    StftConfig(String),

    #[error("wav parse error at byte offset {offset}: {message}")]
    WavFormat { offset: u64, message: String },

    #[error("unsupported wav encoding: {0}")]
    WavUnsupported(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("degenerate metric input: {0}")]
    DegenerateMetric(&'static str),

    #[error("container format error: {0}")]
    Container(String),

    #[error("score model failed: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Errors caused by numerical domains (as opposed to I/O or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::DegenerateTime { .. }
                | Error::ScheduleInconsistency { .. }
                | Error::NonFinite(_)
                | Error::DegenerateMetric(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::WavFormat { .. } | Error::WavUnsupported(_) | Error::Container(_)
        )
    }
}
