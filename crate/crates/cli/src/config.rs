//! Experiment configuration: one JSON document drives the whole pipeline.
//!
//! Every numeric lives here, none are hard-coded in the pipeline, and all
//! randomness is keyed by the explicit `seeds` block. Loading fills
//! defaults; validation errors name the offending key.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sharpshooter::data::SyntheticSpec;
use sharpshooter::methods::{GdConfig, SharpShooterConfig};
use sharpshooter::vae::VaeRole;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum DatasetConfig {
    /// Generate from a seeded synthetic spec.
    Synthetic(SyntheticSpec),
    /// Ingest a `name:type` tagged CSV file.
    #[serde(rename_all = "kebab-case")]
    Csv {
        path: String,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
    },
}

fn default_train_fraction() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct VaeSettings {
    pub beta: f64,
    pub latent_dim: usize,
    pub categorical_weight: f64,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for VaeSettings {
    fn default() -> Self {
        VaeSettings {
            beta: 0.05,
            latent_dim: 2,
            categorical_weight: 0.0,
            hidden: vec![16],
            epochs: 150,
            batch_size: 32,
            learning_rate: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ClassifierSettings {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        ClassifierSettings {
            hidden: vec![16],
            epochs: 300,
            learning_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExplainSettings {
    /// Held-out base-class samples to explain, in dataset order.
    pub n_samples: usize,
    /// Methods run by `explain`/`evaluate`; the `--methods` flag overrides.
    pub methods: Vec<String>,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        ExplainSettings {
            n_samples: 200,
            methods: vec![
                "ss-line".to_string(),
                "ss-gd".to_string(),
                "gdi".to_string(),
                "gdl".to_string(),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepSettings {
    pub betas: Vec<f64>,
    pub latent_dims: Vec<usize>,
    pub role: VaeRole,
    pub hidden: Vec<usize>,
    pub categorical_weight: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            betas: vec![0.01, 0.05, 0.25],
            latent_dims: vec![2, 3],
            role: VaeRole::Target,
            hidden: vec![16],
            categorical_weight: 0.0,
            epochs: 40,
            batch_size: 32,
            learning_rate: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct VizSettings {
    /// Interpolation points per pair in the boundary cloud.
    pub alpha_count: usize,
    pub hex_cell_size: f64,
    /// Base samples whose full interpolation traces are exported.
    pub trace_samples: usize,
    pub trace_alpha_count: usize,
}

impl Default for VizSettings {
    fn default() -> Self {
        VizSettings {
            alpha_count: 25,
            hex_cell_size: 0.25,
            trace_samples: 3,
            trace_alpha_count: 20,
        }
    }
}

/// Explicit seeds for every stochastic stage; reruns with the same seeds are
/// byte-identical. Never seeded from the wall clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Seeds {
    pub data: u64,
    pub classifier: u64,
    pub tvae: u64,
    pub uvae: u64,
    pub sweep: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            data: 1,
            classifier: 2,
            tvae: 3,
            uvae: 4,
            sweep: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OutputSettings {
    pub dir: String,
    /// When false, wall-time fields are written as zero so reruns produce
    /// byte-identical results and reports.
    pub include_timing: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings {
            dir: "out".to_string(),
            include_timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub tvae: VaeSettings,
    #[serde(default)]
    pub uvae: VaeSettings,
    #[serde(default)]
    pub classifier: ClassifierSettings,
    #[serde(default)]
    pub sharpshooter: SharpShooterConfig,
    #[serde(default)]
    pub gdi: GdConfig,
    #[serde(default)]
    pub gdl: GdConfig,
    #[serde(default)]
    pub explain: ExplainSettings,
    #[serde(default)]
    pub sweep: SweepSettings,
    #[serde(default)]
    pub viz: VizSettings,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub output: OutputSettings,
}

impl ExperimentConfig {
    /// Parses and validates a config file, filling defaults.
    pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
        let bytes = std::fs::read(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: ExperimentConfig = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: &str| {
            Err(CliError::Config(format!("{key}: {msg}")))
        };
        if let DatasetConfig::Csv { train_fraction, .. } = &self.dataset {
            if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                return bad("dataset.csv.train-fraction", "must be in (0, 1)");
            }
        }
        for (key, vae) in [("tvae", &self.tvae), ("uvae", &self.uvae)] {
            if vae.latent_dim == 0 {
                return bad(&format!("{key}.latent-dim"), "must be >= 1");
            }
            if vae.batch_size == 0 {
                return bad(&format!("{key}.batch-size"), "must be >= 1");
            }
            if vae.beta < 0.0 {
                return bad(&format!("{key}.beta"), "must be >= 0");
            }
            if !(0.0..=1.0).contains(&vae.categorical_weight) {
                return bad(&format!("{key}.categorical-weight"), "must be in [0, 1]");
            }
            if vae.learning_rate <= 0.0 {
                return bad(&format!("{key}.learning-rate"), "must be positive");
            }
        }
        if self.classifier.learning_rate <= 0.0 {
            return bad("classifier.learning-rate", "must be positive");
        }
        if !(self.sharpshooter.p > 0.0 && self.sharpshooter.p < 1.0) {
            return bad("sharpshooter.p", "must be in (0, 1)");
        }
        if self.sharpshooter.tol <= 0.0 {
            return bad("sharpshooter.tol", "must be positive");
        }
        if self.sharpshooter.grid_size == 0 {
            return bad("sharpshooter.grid-size", "must be >= 1");
        }
        if self.sharpshooter.gd.learning_rate <= 0.0 || self.sharpshooter.gd.fd_step <= 0.0 {
            return bad("sharpshooter.gd", "rates and steps must be positive");
        }
        for (key, gd) in [("gdi", &self.gdi), ("gdl", &self.gdl)] {
            if gd.learning_rate <= 0.0 {
                return bad(&format!("{key}.learning-rate"), "must be positive");
            }
            if !(gd.p > 0.0 && gd.p < 1.0) {
                return bad(&format!("{key}.p"), "must be in (0, 1)");
            }
            if gd.tol <= 0.0 {
                return bad(&format!("{key}.tol"), "must be positive");
            }
            if gd.fd_step <= 0.0 {
                return bad(&format!("{key}.fd-step"), "must be positive");
            }
        }
        if self.explain.n_samples == 0 {
            return bad("explain.n-samples", "must be >= 1");
        }
        for m in &self.explain.methods {
            if m.parse::<sharpshooter::Method>().is_err() {
                return bad("explain.methods", &format!("unknown method '{m}'"));
            }
        }
        if self.sweep.betas.is_empty() || self.sweep.latent_dims.is_empty() {
            return bad("sweep", "beta and latent-dim grids must be non-empty");
        }
        if self.viz.alpha_count < 2 {
            return bad("viz.alpha-count", "must be >= 2");
        }
        if self.viz.hex_cell_size <= 0.0 {
            return bad("viz.hex-cell-size", "must be positive");
        }
        if self.viz.trace_alpha_count == 0 {
            return bad("viz.trace-alpha-count", "must be >= 1");
        }
        Ok(())
    }

    /// Canonical serialized form, used for hashing and round-trip checks.
    pub fn canonical_bytes(&self) -> Result<Vec<u8>, CliError> {
        sharpshooter::io::to_json_bytes(self)
            .map_err(|e| CliError::Config(format!("config serialization failed: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal_json() -> &'static str {
        r#"{
            "dataset": {
                "synthetic": {
                    "tabular": {
                        "class0": {"size": 20, "mean": [-1.0, -1.0], "covariance": 1.0},
                        "class1": {"size": 20, "mean": [1.0, 1.0], "covariance": 1.0}
                    }
                }
            }
        }"#
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(minimal_json()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.sharpshooter.p, 0.5);
        assert_eq!(cfg.sharpshooter.grid_size, 100);
        assert_eq!(cfg.explain.n_samples, 200);
        assert_eq!(cfg.seeds, Seeds::default());
        assert_eq!(cfg.output.dir, "out");
        assert!(cfg.output.include_timing);
    }

    #[test]
    fn out_of_range_p_is_rejected_with_key_name() {
        let mut cfg: ExperimentConfig = serde_json::from_str(minimal_json()).unwrap();
        cfg.sharpshooter.p = 1.5;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("sharpshooter.p"), "{err}");
    }

    #[test]
    fn unknown_method_is_rejected() {
        let mut cfg: ExperimentConfig = serde_json::from_str(minimal_json()).unwrap();
        cfg.explain.methods.push("dice".to_string());
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("explain.methods"), "{err}");
    }

    #[test]
    fn roundtrip_is_identical() {
        let cfg: ExperimentConfig = serde_json::from_str(minimal_json()).unwrap();
        let bytes = cfg.canonical_bytes().unwrap();
        let again: ExperimentConfig = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(bytes, again.canonical_bytes().unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let json = r#"{"dataset": {"csv": {"path": "x.csv"}}, "bogus": 1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(json).is_err());
    }
}
