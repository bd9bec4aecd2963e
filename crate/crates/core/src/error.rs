use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} in {context}")]
    NonFinite { context: &'static str, value: f64 },

    #[error("objective returned non-finite value {value} at step {step}")]
    Divergence { step: usize, value: f64 },

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("empty rollout buffer")]
    EmptyBuffer,

    #[error("training diverged at iteration {iteration}: {reason}")]
    TrainingDiverged { iteration: usize, reason: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
