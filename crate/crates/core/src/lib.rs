//! Counterfactual explanations for binary classifiers via latent-space
//! interpolation between two variational autoencoders.
//!
//! The pipeline trains three models on a tabular or pixel dataset:
//!
//! - a binary [`classifier`] `f(x) -> p(target)` that is being explained,
//! - a *target* VAE fit only on target-class rows, whose reconstruction
//!   projects any input onto the target class, and
//! - a *unified* VAE fit on both classes, whose encoder defines the shared
//!   latent space where interpolation happens.
//!
//! Counterfactual generation methods live behind the
//! [`methods::CounterfactualGenerator`] trait and are selected by name from a
//! [`methods::MethodRegistry`]: `ss-line` (latent line search), `ss-gd`
//! (1-D gradient descent on the interpolation coefficient), and the
//! gradient-descent baselines `gdi` (input space) and `gdl` (latent space).
//! The [`metrics`] module scores every method with the same six-metric
//! suite, and [`viz`] produces plot-ready projections, hexbin grids,
//! interpolation traces, and hyperparameter sweep data.
//!
//! Everything is seeded and deterministic: identical inputs and seeds
//! produce bit-identical models, results, and exports.

pub mod classifier;
pub mod data;
pub mod error;
pub mod io;
pub mod matrix;
pub mod methods;
pub mod metrics;
pub mod nn;
pub mod schema;
pub mod vae;
pub mod viz;

pub use classifier::{auc, train_classifier, ClassifierModel, Scorer};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use methods::{
    CounterfactualGenerator, CounterfactualResult, ExplainContext, GdConfig, Method,
    MethodRegistry, SharpShooterConfig, Status,
};
pub use metrics::{evaluate_batch, MetricsReport, MetricsTable};
pub use nn::{grad_check, Activation, AdamConfig, AdamState, DenseLayer, LossSpec, MlpNetwork};
pub use schema::FeatureSchema;
pub use vae::{kl_diag_gaussian, reparameterize, train_vae, VaeLossBreakdown, VaeModel, VaeRole};
