//! Loss functions over network outputs.
//!
//! Every loss is a mean, so magnitudes are comparable across batch sizes:
//! MSE and binary cross entropy average over samples and output columns,
//! grouped cross entropy averages over samples and groups, and the diagonal
//! Gaussian KL averages over samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::activation::{validate_blocks, Block};

/// Log arguments are clamped to `[CLAMP, 1 - CLAMP]` so cross entropies stay
/// finite under saturated probabilities.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LossSpec {
    MeanSquaredError,
    BinaryCrossEntropy,
    /// Cross entropy of one-hot targets against simplex-valued output blocks.
    GroupedCrossEntropy { groups: Vec<Block> },
    /// Convex mix of continuous MSE and grouped cross entropy used as the
    /// reconstruction term for mixed tabular data: the first `continuous`
    /// columns are squared error, the listed blocks are cross entropy.
    MixedReconstruction {
        continuous: usize,
        groups: Vec<Block>,
        categorical_weight: f64,
    },
    /// KL(N(mu, diag sigma^2) || N(0, I)) on outputs laid out as
    /// `[mu | logvar]`; targets are ignored.
    KlDiagGaussian,
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn check_same_shape(output: &Matrix, targets: &Matrix) -> Result<()> {
    if output.rows() != targets.rows() || output.cols() != targets.cols() {
        return Err(Error::shape(format!(
            "targets {}x{} do not match output {}x{}",
            targets.rows(),
            targets.cols(),
            output.rows(),
            output.cols()
        )));
    }
    Ok(())
}

fn mse_block(output: &Matrix, targets: &Matrix, cols: std::ops::Range<usize>) -> f64 {
    let width = cols.len();
    if width == 0 || output.rows() == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for r in 0..output.rows() {
        for c in cols.clone() {
            let d = output.get(r, c) - targets.get(r, c);
            sum += d * d;
        }
    }
    sum / (output.rows() * width) as f64
}

fn grouped_ce(output: &Matrix, targets: &Matrix, groups: &[Block]) -> f64 {
    if groups.is_empty() || output.rows() == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for r in 0..output.rows() {
        for g in groups {
            for c in g.range() {
                let t = targets.get(r, c);
                if t != 0.0 {
                    sum -= t * clamp_prob(output.get(r, c)).ln();
                }
            }
        }
    }
    sum / (output.rows() * groups.len()) as f64
}

impl LossSpec {
    /// Scalar loss value.
    pub fn evaluate(&self, output: &Matrix, targets: &Matrix) -> Result<f64> {
        match self {
            LossSpec::MeanSquaredError => {
                check_same_shape(output, targets)?;
                Ok(mse_block(output, targets, 0..output.cols()))
            }
            LossSpec::BinaryCrossEntropy => {
                check_same_shape(output, targets)?;
                let (n, m) = (output.rows(), output.cols());
                let mut sum = 0.0;
                for (o, t) in output.data().iter().zip(targets.data()) {
                    let p = clamp_prob(*o);
                    sum -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
                }
                Ok(sum / (n * m) as f64)
            }
            LossSpec::GroupedCrossEntropy { groups } => {
                check_same_shape(output, targets)?;
                validate_blocks(groups, output.cols())?;
                Ok(grouped_ce(output, targets, groups))
            }
            LossSpec::MixedReconstruction {
                continuous,
                groups,
                categorical_weight,
            } => {
                check_same_shape(output, targets)?;
                validate_blocks(groups, output.cols())?;
                if groups.iter().any(|g| g.start < *continuous) {
                    return Err(Error::contract(
                        "categorical groups overlap the continuous block",
                    ));
                }
                let w = *categorical_weight;
                let mse = mse_block(output, targets, 0..*continuous);
                let ce = grouped_ce(output, targets, groups);
                Ok((1.0 - w) * mse + w * ce)
            }
            LossSpec::KlDiagGaussian => {
                let (n, cols) = (output.rows(), output.cols());
                if cols % 2 != 0 {
                    return Err(Error::shape(
                        "KL loss expects [mu | logvar] with even width".to_string(),
                    ));
                }
                let latent = cols / 2;
                let mut sum = 0.0;
                for r in 0..n {
                    let row = output.row(r);
                    for j in 0..latent {
                        let (mu, lv) = (row[j], row[latent + j]);
                        sum += -0.5 * (1.0 + lv - mu * mu - lv.exp());
                    }
                }
                Ok(if n == 0 { 0.0 } else { sum / n as f64 })
            }
        }
    }

    /// `dL/d_output`, same shape as `output`.
    pub fn gradient(&self, output: &Matrix, targets: &Matrix) -> Result<Matrix> {
        let (n, m) = (output.rows(), output.cols());
        let mut grad = Matrix::zeros(n, m);
        match self {
            LossSpec::MeanSquaredError => {
                check_same_shape(output, targets)?;
                let scale = 2.0 / (n * m) as f64;
                for ((g, &o), &t) in grad
                    .data_mut()
                    .iter_mut()
                    .zip(output.data())
                    .zip(targets.data())
                {
                    *g = scale * (o - t);
                }
            }
            LossSpec::BinaryCrossEntropy => {
                check_same_shape(output, targets)?;
                let scale = 1.0 / (n * m) as f64;
                for ((g, &o), &t) in grad
                    .data_mut()
                    .iter_mut()
                    .zip(output.data())
                    .zip(targets.data())
                {
                    let p = clamp_prob(o);
                    *g = scale * (-(t / p) + (1.0 - t) / (1.0 - p));
                }
            }
            LossSpec::GroupedCrossEntropy { groups } => {
                check_same_shape(output, targets)?;
                validate_blocks(groups, m)?;
                grouped_ce_gradient(&mut grad, output, targets, groups, 1.0);
            }
            LossSpec::MixedReconstruction {
                continuous,
                groups,
                categorical_weight,
            } => {
                check_same_shape(output, targets)?;
                validate_blocks(groups, m)?;
                let w = *categorical_weight;
                if *continuous > 0 {
                    let scale = (1.0 - w) * 2.0 / (n * continuous) as f64;
                    for r in 0..n {
                        for c in 0..*continuous {
                            grad.set(r, c, scale * (output.get(r, c) - targets.get(r, c)));
                        }
                    }
                }
                grouped_ce_gradient(&mut grad, output, targets, groups, w);
            }
            LossSpec::KlDiagGaussian => {
                if m % 2 != 0 {
                    return Err(Error::shape(
                        "KL loss expects [mu | logvar] with even width".to_string(),
                    ));
                }
                let latent = m / 2;
                let inv_n = 1.0 / n as f64;
                for r in 0..n {
                    for j in 0..latent {
                        let mu = output.get(r, j);
                        let lv = output.get(r, latent + j);
                        grad.set(r, j, mu * inv_n);
                        grad.set(r, latent + j, 0.5 * (lv.exp() - 1.0) * inv_n);
                    }
                }
            }
        }
        Ok(grad)
    }
}

fn grouped_ce_gradient(
    grad: &mut Matrix,
    output: &Matrix,
    targets: &Matrix,
    groups: &[Block],
    weight: f64,
) {
    if groups.is_empty() || output.rows() == 0 {
        return;
    }
    let scale = weight / (output.rows() * groups.len()) as f64;
    for r in 0..output.rows() {
        for g in groups {
            for c in g.range() {
                let t = targets.get(r, c);
                if t != 0.0 {
                    grad.set(r, c, -scale * t / clamp_prob(output.get(r, c)));
                }
            }
        }
    }
}
