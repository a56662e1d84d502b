use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },

    #[error("non-uniform grid at row {row}")]
    NonUniformGrid { row: usize },

    #[error("empty trace")]
    EmptyTrace,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trace too short: {len} samples, need at least {needed}")]
    TraceTooShort { len: usize, needed: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("telegraph step dt = {dt_s:e} s exceeds one tenth of the shortest dwell time {min_dwell_s:e} s")]
    TelegraphStepTooCoarse { dt_s: f64, min_dwell_s: f64 },

    #[error("no transitions in bit sequence")]
    NoTransitions,

    #[error("rate mismatch: {0}")]
    RateMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no activation after onset step {onset_step}")]
    NoActivation { onset_step: usize },

    #[error("need at least 2 samples to reconstruct, got {0}")]
    TooFewSamples(usize),

    #[error("reference signal has zero energy")]
    ZeroEnergy,

    #[error("frequency band contains no bins")]
    EmptyBand,

    #[error("empty stream")]
    EmptyStream,

    #[error("config error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
