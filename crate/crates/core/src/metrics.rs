//! Six-metric evaluation suite: validity, proximity, sparsity, classifier
//! shift, reconstruction loss, and per-sample time, aggregated per method.
//!
//! Except for validity and time, metrics are averaged only over results whose
//! counterfactual actually classifies as the target class; the crossing is
//! re-verified here with the classifier rather than trusted from the result
//! status.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::Scorer;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::methods::{CounterfactualResult, Method};
use crate::schema::{argmax, FeatureSchema};
use crate::vae::VaeModel;

/// Half of one 8-bit intensity step, for pixel sparsity counting.
pub const HALF_PIXEL: f64 = 0.5 / 255.0;

/// Minimum absolute change for a continuous feature to count as changed.
pub const CONTINUOUS_CHANGE_EPS: f64 = 1e-9;

/// Fraction of attempts whose counterfactual crossed the decision boundary,
/// judged by result status.
pub fn validity(results: &[CounterfactualResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::contract("validity needs at least one result"));
    }
    let crossed = results.iter().filter(|r| r.crossed()).count();
    Ok(crossed as f64 / results.len() as f64)
}

/// L2 distance between the mean codes of the two samples in the unified
/// VAE's latent space.
pub fn proximity(uvae: &VaeModel, x_base: &[f64], x_cf: &[f64]) -> Result<f64> {
    let zb = uvae.encode_mean_row(x_base)?;
    let zc = uvae.encode_mean_row(x_cf)?;
    Ok(zb
        .iter()
        .zip(&zc)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Fraction of features changed: pixels count intensity changes beyond
/// [`HALF_PIXEL`]; tabular data counts continuous changes beyond
/// [`CONTINUOUS_CHANGE_EPS`] plus categorical groups whose argmax moved.
pub fn sparsity(x_base: &[f64], x_cf: &[f64], schema: &FeatureSchema) -> Result<f64> {
    if x_base.len() != schema.input_dim() || x_cf.len() != schema.input_dim() {
        return Err(Error::shape("sparsity inputs do not match schema".to_string()));
    }
    if schema.pixel_mode {
        let changed = x_base
            .iter()
            .zip(x_cf)
            .filter(|(a, b)| (*a - *b).abs() > HALF_PIXEL)
            .count();
        return Ok(changed as f64 / x_base.len() as f64);
    }
    let mut changed = 0usize;
    for c in 0..schema.continuous_count() {
        if (x_base[c] - x_cf[c]).abs() > CONTINUOUS_CHANGE_EPS {
            changed += 1;
        }
    }
    for g in 0..schema.categorical.len() {
        let block = schema.group_block(g);
        if argmax(&x_base[block.range()]) != argmax(&x_cf[block.range()]) {
            changed += 1;
        }
    }
    let total = schema.continuous_count() + schema.categorical.len();
    Ok(changed as f64 / total as f64)
}

/// `|f(x_cf) - f(uvae_reconstruction(x_cf))|`: how much one pass through the
/// unified VAE moves the classification score. Large shifts flag
/// off-manifold counterfactuals.
pub fn classifier_shift(
    classifier: &dyn Scorer,
    uvae: &VaeModel,
    x_cf: &[f64],
) -> Result<f64> {
    let direct = classifier.score(x_cf)?;
    let reconstructed = uvae.reconstruct_mean(&Matrix::from_row(x_cf)?)?;
    let shifted = classifier.score(reconstructed.row(0))?;
    Ok((direct - shifted).abs())
}

/// Negative ELBO of the counterfactual under the unified VAE at the
/// posterior mean; smaller is more in-sample.
pub fn reconstruction_score(uvae: &VaeModel, x_cf: &[f64]) -> Result<f64> {
    Ok(uvae.deterministic_elbo(&Matrix::from_row(x_cf)?)?.total)
}

/// Thresholds and re-check settings recorded alongside the aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MetricsMetadata {
    /// Decision threshold used to re-verify crossings.
    pub p: f64,
    pub half_pixel_threshold: f64,
    pub continuous_change_threshold: f64,
}

/// Aggregated metrics for one method on one dataset.
///
/// Mean fields are `None` when no counterfactual survived the crossing
/// re-check; `n_excluded` counts the dropped attempts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MetricsReport {
    pub method: Method,
    pub n_attempted: usize,
    pub n_valid: usize,
    pub n_excluded: usize,
    pub validity: f64,
    pub proximity: Option<f64>,
    pub sparsity: Option<f64>,
    pub classifier_shift: Option<f64>,
    pub reconstruction_loss: Option<f64>,
    /// Mean wall-clock seconds per attempted sample.
    pub time_secs: f64,
    /// Results whose stored status disagreed with the re-verified crossing.
    pub status_mismatches: usize,
    pub metadata: MetricsMetadata,
}

/// Aggregates one method's results; `p` is the decision threshold for the
/// independent crossing re-check.
pub fn evaluate_batch(
    classifier: &dyn Scorer,
    uvae: &VaeModel,
    results: &[CounterfactualResult],
    p: f64,
) -> Result<MetricsReport> {
    if results.is_empty() {
        return Err(Error::contract("evaluate_batch needs at least one result"));
    }
    let method = results[0].method;
    if results.iter().any(|r| r.method != method) {
        return Err(Error::contract(
            "evaluate_batch expects results from a single method",
        ));
    }

    let n_attempted = results.len();
    let mut n_valid = 0usize;
    let mut status_mismatches = 0usize;
    let mut prox_sum = 0.0;
    let mut spars_sum = 0.0;
    let mut shift_sum = 0.0;
    let mut recon_sum = 0.0;
    let mut time_sum = 0.0;

    for r in results {
        time_sum += r.wall_time_secs;
        let crossed_recheck = match &r.x_cf {
            Some(x_cf) => classifier.score(x_cf)? > p,
            None => false,
        };
        if crossed_recheck != r.crossed() {
            status_mismatches += 1;
        }
        if !crossed_recheck {
            continue;
        }
        let x_cf = r.x_cf.as_ref().expect("crossing result carries x_cf");
        n_valid += 1;
        prox_sum += proximity(uvae, &r.x_base, x_cf)?;
        spars_sum += sparsity(&r.x_base, x_cf, uvae.schema())?;
        shift_sum += classifier_shift(classifier, uvae, x_cf)?;
        recon_sum += reconstruction_score(uvae, x_cf)?;
    }

    let mean = |sum: f64| {
        if n_valid > 0 {
            Some(sum / n_valid as f64)
        } else {
            None
        }
    };

    Ok(MetricsReport {
        method,
        n_attempted,
        n_valid,
        n_excluded: n_attempted - n_valid,
        validity: n_valid as f64 / n_attempted as f64,
        proximity: mean(prox_sum),
        sparsity: mean(spars_sum),
        classifier_shift: mean(shift_sum),
        reconstruction_loss: mean(recon_sum),
        time_secs: time_sum / n_attempted as f64,
        status_mismatches,
        metadata: MetricsMetadata {
            p,
            half_pixel_threshold: HALF_PIXEL,
            continuous_change_threshold: CONTINUOUS_CHANGE_EPS,
        },
    })
}

/// All methods side by side, with the best method per metric column flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub reports: Vec<MetricsReport>,
    /// Column name -> method with the best value (higher validity, lower
    /// everything else); `None` when no method reported the metric.
    pub best: BTreeMap<String, Option<Method>>,
}

impl MetricsTable {
    pub fn new(reports: Vec<MetricsReport>) -> Self {
        let mut best = BTreeMap::new();
        let max_by = |key: fn(&MetricsReport) -> Option<f64>, reports: &[MetricsReport]| {
            reports
                .iter()
                .filter_map(|r| key(r).map(|v| (r.method, v)))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|(m, _)| m)
        };
        let min_by = |key: fn(&MetricsReport) -> Option<f64>, reports: &[MetricsReport]| {
            reports
                .iter()
                .filter_map(|r| key(r).map(|v| (r.method, v)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|(m, _)| m)
        };
        best.insert("val".to_string(), max_by(|r| Some(r.validity), &reports));
        best.insert("prox".to_string(), min_by(|r| r.proximity, &reports));
        best.insert("spars".to_string(), min_by(|r| r.sparsity, &reports));
        best.insert("cs".to_string(), min_by(|r| r.classifier_shift, &reports));
        best.insert(
            "recon".to_string(),
            min_by(|r| r.reconstruction_loss, &reports),
        );
        best.insert("time".to_string(), min_by(|r| Some(r.time_secs), &reports));
        MetricsTable { reports, best }
    }

    /// Plain-text table, method rows by metric columns, best-per-column
    /// values marked with `*`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8} {:>10} {:>10} {:>10} {:>10} {:>12} {:>12}\n",
            "method", "val", "prox", "spars", "CS", "recon", "time"
        ));
        let fmt = |v: Option<f64>, best: bool, sci: bool| -> String {
            match v {
                None => "-".to_string(),
                Some(v) => {
                    let s = if sci {
                        format!("{v:.3e}")
                    } else {
                        format!("{v:.3}")
                    };
                    if best {
                        format!("{s}*")
                    } else {
                        s
                    }
                }
            }
        };
        let is_best = |col: &str, m: Method| self.best.get(col) == Some(&Some(m));
        for r in &self.reports {
            out.push_str(&format!(
                "{:<8} {:>10} {:>10} {:>10} {:>10} {:>12} {:>12}\n",
                r.method.as_str(),
                fmt(Some(r.validity), is_best("val", r.method), false),
                fmt(r.proximity, is_best("prox", r.method), false),
                fmt(r.sparsity, is_best("spars", r.method), false),
                fmt(r.classifier_shift, is_best("cs", r.method), false),
                fmt(r.reconstruction_loss, is_best("recon", r.method), true),
                fmt(Some(r.time_secs), is_best("time", r.method), true),
            ));
        }
        out
    }
}
