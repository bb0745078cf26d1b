//! Finite-difference verification of backpropagation.

use crate::error::Result;
use crate::matrix::Matrix;
use crate::nn::loss::LossSpec;
use crate::nn::mlp::{backprop, MlpNetwork};

/// Outcome of comparing analytic gradients against central differences.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    /// `max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
    pub max_relative_deviation: f64,
    pub params_checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn within_tolerance(&self) -> bool {
        self.max_relative_deviation < self.tolerance
    }
}

/// Compares the analytic gradient of `loss` through `net` against central
/// finite differences with perturbation `eps`.
pub fn grad_check(
    net: &MlpNetwork,
    loss: &LossSpec,
    x: &Matrix,
    targets: &Matrix,
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    assert!(eps > 0.0 && tol > 0.0, "eps and tol must be positive");
    let analytic = backprop(net, x, loss, targets)?.grads;
    let analytic_blocks: Vec<Vec<f64>> =
        analytic.blocks().iter().map(|b| b.to_vec()).collect();

    let mut work = net.clone();
    let n_blocks = work.param_blocks_mut().len();

    let mut max_dev: f64 = 0.0;
    let mut checked = 0usize;
    for block_idx in 0..n_blocks {
        let block_len = analytic_blocks[block_idx].len();
        for p in 0..block_len {
            let original = {
                let blocks = work.param_blocks_mut();
                blocks[block_idx][p]
            };

            let loss_plus = perturbed_loss(&mut work, block_idx, p, original + eps, loss, x, targets)?;
            let loss_minus =
                perturbed_loss(&mut work, block_idx, p, original - eps, loss, x, targets)?;
            {
                let mut blocks = work.param_blocks_mut();
                blocks[block_idx][p] = original;
            }

            let numeric = (loss_plus - loss_minus) / (2.0 * eps);
            let a = analytic_blocks[block_idx][p];
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            max_dev = max_dev.max((a - numeric).abs() / denom);
            checked += 1;
        }
    }

    Ok(GradCheckReport {
        max_relative_deviation: max_dev,
        params_checked: checked,
        tolerance: tol,
    })
}

fn perturbed_loss(
    net: &mut MlpNetwork,
    block_idx: usize,
    p: usize,
    value: f64,
    loss: &LossSpec,
    x: &Matrix,
    targets: &Matrix,
) -> Result<f64> {
    {
        let mut blocks = net.param_blocks_mut();
        blocks[block_idx][p] = value;
    }
    let output = net.forward(x)?;
    loss.evaluate(&output, targets)
}
