//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, training, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimension or shape disagreement between tensors or layers.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Non-finite values encountered during a forward pass.
    #[error("non-finite activations in layer {layer}: {detail}")]
    Numeric { layer: usize, detail: String },

    /// A caller-side contract was violated (invalid argument, bad spec).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Training produced a NaN loss and was aborted.
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
