use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("insufficient history: need {need} consecutive samples, have {have}")]
    InsufficientHistory { need: usize, have: usize },

    #[error("data too large for certified run: {0}")]
    Infeasible(String),

    #[error("analyticity radius exhausted (tau = {tau})")]
    RadiusExhausted { tau: f64 },

    #[error("blow-up detected at t = {t}")]
    BlowUp { t: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
