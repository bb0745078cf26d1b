//! Minimal dense neural-network substrate: matrices live in [`crate::matrix`],
//! this module adds layers, forward/backward passes, losses, Adam, and
//! finite-difference gradient verification.

pub mod activation;
pub mod adam;
pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod mlp;

pub use activation::{Activation, Block};
pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckReport};
pub use layer::DenseLayer;
pub use loss::LossSpec;
pub use mlp::{backprop, BackpropResult, ForwardTrace, MlpNetwork, NetGradients};
