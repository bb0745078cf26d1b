//! Library surface of the command-line harness, exposed for integration
//! tests: configuration, the pipeline verbs, and the run manifest.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use manifest::RunManifest;
pub use pipeline::{run_command, RunOptions, Verb};
