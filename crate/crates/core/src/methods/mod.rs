//! Counterfactual generation methods behind a common strategy trait.
//!
//! Every method consumes the same immutable [`ExplainContext`] (classifier,
//! target VAE, unified VAE) and emits a [`CounterfactualResult`] with uniform
//! status semantics, so the metric suite treats them interchangeably:
//!
//! - `ss-line`: ascending line search over the latent interpolation grid.
//! - `ss-gd`: 1-D gradient descent on the interpolation coefficient.
//! - `gdi`: gradient descent in input space.
//! - `gdl`: gradient descent in the unified VAE's latent space.
//!
//! Generators are registered by name in a [`MethodRegistry`] and selected at
//! runtime from configuration.

pub mod gdi;
pub mod gdl;
pub mod interp;
pub mod ss_gd;
pub mod ss_line;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifier::Scorer;
use crate::error::{Error, Result};
use crate::schema::FeatureSchema;
use crate::vae::VaeModel;

pub use gdi::InputGradientDescent;
pub use gdl::LatentGradientDescent;
pub use interp::{interpolate_codes, latent_endpoints, project_to_target, LatentEndpoints};
pub use ss_gd::AlphaGradientDescent;
pub use ss_line::AlphaLineSearch;

/// Identifies one generation method in results, reports, and CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SsLine,
    SsGd,
    Gdi,
    Gdl,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::SsLine, Method::SsGd, Method::Gdi, Method::Gdl];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::SsLine => "ss-line",
            Method::SsGd => "ss-gd",
            Method::Gdi => "gdi",
            Method::Gdl => "gdl",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ss-line" => Ok(Method::SsLine),
            "ss-gd" => Ok(Method::SsGd),
            "gdi" => Ok(Method::Gdi),
            "gdl" => Ok(Method::Gdl),
            other => Err(Error::contract(format!(
                "unknown method '{other}' (expected ss-line, ss-gd, gdi, gdl)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one generation attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Crossed the threshold and landed within tolerance of the target score.
    ValidWithinTol,
    /// Crossed the threshold but missed the tolerance band.
    CrossedOnly,
    /// Never crossed; no counterfactual is reported.
    Failed,
}

/// Per-sample record produced by every method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CounterfactualResult {
    pub method: Method,
    pub x_base: Vec<f64>,
    pub x_cf: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub score: Option<f64>,
    pub status: Status,
    pub iterations: usize,
    pub wall_time_secs: f64,
}

impl CounterfactualResult {
    /// True when the counterfactual crossed the decision threshold.
    pub fn crossed(&self) -> bool {
        matches!(self.status, Status::ValidWithinTol | Status::CrossedOnly)
    }
}

/// Immutable models shared by all generators.
pub struct ExplainContext<'a> {
    pub classifier: &'a dyn Scorer,
    pub tvae: &'a VaeModel,
    pub uvae: &'a VaeModel,
}

impl<'a> ExplainContext<'a> {
    pub fn schema(&self) -> &FeatureSchema {
        self.uvae.schema()
    }
}

/// One counterfactual generation strategy.
pub trait CounterfactualGenerator: Sync {
    /// Registry key; also the `--methods` CLI token.
    fn name(&self) -> &'static str;

    fn method(&self) -> Method;

    /// Generates a counterfactual for one base sample. Search failure is a
    /// status, not an error; errors are reserved for contract violations.
    fn generate(&self, ctx: &ExplainContext, x_base: &[f64]) -> Result<CounterfactualResult>;
}

/// Name-keyed set of generators selected at runtime.
#[derive(Default)]
pub struct MethodRegistry {
    generators: BTreeMap<&'static str, Box<dyn CounterfactualGenerator>>,
}

impl MethodRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, generator: Box<dyn CounterfactualGenerator>) -> Result<()> {
        let name = generator.name();
        if self.generators.contains_key(name) {
            return Err(Error::contract(format!(
                "method '{name}' is already registered"
            )));
        }
        self.generators.insert(name, generator);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&dyn CounterfactualGenerator> {
        self.generators.get(name).map(|g| g.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.generators.keys().copied().collect()
    }

    /// Registry holding all four standard methods with the given configs.
    pub fn standard(
        ss: &SharpShooterConfig,
        gdi: &GdConfig,
        gdl: &GdConfig,
    ) -> Result<MethodRegistry> {
        let mut reg = MethodRegistry::new();
        reg.register(Box::new(AlphaLineSearch::new(ss.clone())?))?;
        reg.register(Box::new(AlphaGradientDescent::new(ss.clone())?))?;
        reg.register(Box::new(InputGradientDescent::new(gdi.clone())?))?;
        reg.register(Box::new(LatentGradientDescent::new(gdl.clone())?))?;
        Ok(reg)
    }
}

/// Settings for the 1-D descent variant on the interpolation coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AlphaGdSettings {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Central-difference step for the gradient in alpha.
    pub fd_step: f64,
}

impl Default for AlphaGdSettings {
    fn default() -> Self {
        AlphaGdSettings {
            learning_rate: 0.25,
            max_iters: 200,
            fd_step: 1e-3,
        }
    }
}

/// Configuration shared by the two interpolation-based methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SharpShooterConfig {
    /// Decision threshold the counterfactual must cross.
    pub p: f64,
    /// Acceptance half-width around the target score.
    pub tol: f64,
    /// Score the search aims for; the decision boundary by default.
    pub target_score: f64,
    /// Number of interpolation coefficients scanned by the line search.
    pub grid_size: usize,
    /// Draw the coefficients uniformly at random (still scanned ascending)
    /// instead of the evenly spaced grid.
    pub randomized_grid: bool,
    /// Seed for the randomized grid; unused for the even grid.
    pub grid_seed: u64,
    pub gd: AlphaGdSettings,
}

impl Default for SharpShooterConfig {
    fn default() -> Self {
        SharpShooterConfig {
            p: 0.5,
            tol: 0.05,
            target_score: 0.5,
            grid_size: 100,
            randomized_grid: false,
            grid_seed: 0,
            gd: AlphaGdSettings::default(),
        }
    }
}

impl SharpShooterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::contract("p must be in (0, 1)"));
        }
        if self.tol <= 0.0 {
            return Err(Error::contract("tol must be positive"));
        }
        if self.grid_size == 0 {
            return Err(Error::contract("grid size must be >= 1"));
        }
        if self.gd.learning_rate <= 0.0 || self.gd.fd_step <= 0.0 {
            return Err(Error::contract(
                "alpha descent rates and steps must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    /// Backpropagate through the models.
    AnalyticBackprop,
    /// Central differences on the score; works for black-box classifiers.
    FiniteDifference,
}

/// Configuration for the input- and latent-space descent baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GdConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub target_score: f64,
    pub p: f64,
    pub gradient_mode: GradientMode,
    /// Per-coordinate step for [`GradientMode::FiniteDifference`].
    pub fd_step: f64,
}

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig {
            learning_rate: 0.05,
            max_iters: 2000,
            tol: 0.05,
            target_score: 0.5,
            p: 0.5,
            gradient_mode: GradientMode::AnalyticBackprop,
            fd_step: 1e-6,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::contract("learning rate must be positive"));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::contract("p must be in (0, 1)"));
        }
        if self.tol <= 0.0 || self.fd_step <= 0.0 {
            return Err(Error::contract("tol and fd step must be positive"));
        }
        Ok(())
    }
}

/// A schema-valid candidate with its classifier score.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub x: Vec<f64>,
    pub score: f64,
    pub alpha: Option<f64>,
}

/// Makes an iterate reportable: categorical blocks are argmax-rounded to
/// exact one-hot vectors and pixels are clamped into `[0, 1]`. Returns
/// `None` when the row is already schema-valid as-is (pure continuous).
pub(crate) fn report_view(schema: &FeatureSchema, x: &[f64]) -> Option<Vec<f64>> {
    if schema.pixel_mode {
        Some(x.iter().map(|&v| v.clamp(0.0, 1.0)).collect())
    } else if schema.categorical.is_empty() {
        None
    } else {
        Some(schema.round_categoricals(x))
    }
}

/// Stopwatch plus fallback bookkeeping shared by all generators: tracks the
/// best threshold-crossing candidate seen so far and assembles the final
/// result under the `valid-within-tol > crossed-only > failed` hierarchy.
pub(crate) struct SearchState {
    method: Method,
    x_base: Vec<f64>,
    target_score: f64,
    started: Instant,
    iterations: usize,
    best_crossing: Option<Candidate>,
}

impl SearchState {
    pub fn new(method: Method, x_base: &[f64], target_score: f64) -> Self {
        SearchState {
            method,
            x_base: x_base.to_vec(),
            target_score,
            started: Instant::now(),
            iterations: 0,
            best_crossing: None,
        }
    }

    pub fn count_iteration(&mut self) {
        self.iterations += 1;
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Remembers `candidate` if it crosses `p` and sits closer to the target
    /// score than anything seen before.
    pub fn offer_crossing(&mut self, candidate: &Candidate, p: f64) {
        if candidate.score <= p {
            return;
        }
        let dist = (candidate.score - self.target_score).abs();
        let better = match &self.best_crossing {
            None => true,
            Some(best) => dist < (best.score - self.target_score).abs(),
        };
        if better {
            self.best_crossing = Some(candidate.clone());
        }
    }

    pub fn accept(self, candidate: Candidate) -> CounterfactualResult {
        CounterfactualResult {
            method: self.method,
            x_base: self.x_base,
            alpha: candidate.alpha,
            score: Some(candidate.score),
            x_cf: Some(candidate.x),
            status: Status::ValidWithinTol,
            iterations: self.iterations,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        }
    }

    /// No candidate met the tolerance: fall back to the best crossing, or
    /// report failure.
    pub fn finish(self) -> CounterfactualResult {
        let wall_time_secs = self.started.elapsed().as_secs_f64();
        match self.best_crossing {
            Some(c) => CounterfactualResult {
                method: self.method,
                x_base: self.x_base,
                alpha: c.alpha,
                score: Some(c.score),
                x_cf: Some(c.x),
                status: Status::CrossedOnly,
                iterations: self.iterations,
                wall_time_secs,
            },
            None => CounterfactualResult {
                method: self.method,
                x_base: self.x_base,
                alpha: None,
                score: None,
                x_cf: None,
                status: Status::Failed,
                iterations: self.iterations,
                wall_time_secs,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            let parsed: Method = m.as_str().parse().unwrap();
            assert_eq!(parsed, m);
        }
        assert!("growing-spheres".parse::<Method>().is_err());
    }

    #[test]
    fn registry_registers_and_rejects_duplicates() {
        let ss = SharpShooterConfig::default();
        let gd = GdConfig::default();
        let reg = MethodRegistry::standard(&ss, &gd, &gd).unwrap();
        assert_eq!(reg.names(), vec!["gdi", "gdl", "ss-gd", "ss-line"]);
        assert!(reg.get("ss-line").is_some());
        assert!(reg.get("nope").is_none());

        let mut reg = MethodRegistry::new();
        reg.register(Box::new(AlphaLineSearch::new(ss.clone()).unwrap()))
            .unwrap();
        assert!(reg
            .register(Box::new(AlphaLineSearch::new(ss).unwrap()))
            .is_err());
    }

    #[test]
    fn config_validation_catches_out_of_range() {
        let ss = SharpShooterConfig {
            p: 1.5,
            ..SharpShooterConfig::default()
        };
        assert!(ss.validate().is_err());
        let gd = GdConfig {
            learning_rate: 0.0,
            ..GdConfig::default()
        };
        assert!(gd.validate().is_err());
    }

    #[test]
    fn search_state_fallback_hierarchy() {
        let mut s = SearchState::new(Method::Gdi, &[0.0], 0.5);
        assert_eq!(s.iterations(), 0);
        // Below p: ignored.
        s.offer_crossing(
            &Candidate {
                x: vec![0.1],
                score: 0.4,
                alpha: None,
            },
            0.5,
        );
        // Crossings ranked by distance to the target.
        s.offer_crossing(
            &Candidate {
                x: vec![0.2],
                score: 0.9,
                alpha: None,
            },
            0.5,
        );
        s.offer_crossing(
            &Candidate {
                x: vec![0.3],
                score: 0.6,
                alpha: None,
            },
            0.5,
        );
        let r = s.finish();
        assert_eq!(r.status, Status::CrossedOnly);
        assert_eq!(r.score, Some(0.6));
        assert_eq!(r.x_cf, Some(vec![0.3]));

        let s = SearchState::new(Method::Gdi, &[0.0], 0.5);
        let r = s.finish();
        assert_eq!(r.status, Status::Failed);
        assert!(r.x_cf.is_none() && r.score.is_none());
    }
}
