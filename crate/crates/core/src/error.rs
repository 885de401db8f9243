use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {got} does not match grid ({want} points expected)")]
    FieldLength { got: usize, want: usize },

    #[error("non-finite value detected at step {step} (index {index})")]
    NonFinite { step: usize, index: usize },

    #[error("non-physical state at step {step}, index {index}: {what} = {value}")]
    NonPhysical {
        step: usize,
        index: usize,
        what: &'static str,
        value: f64,
    },

    #[error("scheme requires smoothness multipliers but none were supplied")]
    MissingMultipliers,

    #[error("invalid flux parameter: {0}")]
    InvalidFlux(String),

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("pressure function admits no positive root (vacuum between the states)")]
    Vacuum,

    #[error("star-state iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("sound speed undefined (c^2 = {0} <= 0) in interface average")]
    SoundSpeed(f64),

    #[error("invalid problem description: {0}")]
    BadProblem(String),

    #[error("training aborted: {0}")]
    Training(String),

    #[error("no model checkpoint with a finite validation loss")]
    NoUsableCheckpoint,

    #[error("model file not found: {0}")]
    MissingModel(PathBuf),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
