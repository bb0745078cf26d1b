//! Feed-forward network over dense layers, with manual backpropagation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::activation::Activation;
use crate::nn::layer::DenseLayer;
use crate::nn::loss::LossSpec;

/// Ordered dense layers; adjacent dimensions must chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    layers: Vec<DenseLayer>,
}

/// Per-layer parameter gradients, aligned with [`MlpNetwork::layers`].
#[derive(Debug, Clone)]
pub struct NetGradients {
    pub layers: Vec<LayerGradients>,
}

#[derive(Debug, Clone)]
pub struct LayerGradients {
    pub d_weights: Matrix,
    pub d_bias: Vec<f64>,
}

/// Cached intermediates from a forward pass, consumed by [`MlpNetwork::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Matrix,
    /// Pre-activations per layer.
    pub zs: Vec<Matrix>,
    /// Post-activations per layer; the last entry is the network output.
    pub outs: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Matrix {
        self.outs.last().expect("network has at least one layer")
    }
}

impl MlpNetwork {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::contract("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape(format!(
                    "layer output {} does not chain into next input {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        Ok(MlpNetwork { layers })
    }

    /// Glorot-initialized network through `dims` with one activation per layer.
    pub fn glorot<R: rand::Rng + ?Sized>(
        dims: &[usize],
        activations: Vec<Activation>,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::contract(
                "need one activation per layer and at least two dims",
            ));
        }
        let mut layers = Vec::with_capacity(activations.len());
        for (i, act) in activations.into_iter().enumerate() {
            layers.push(DenseLayer::glorot(dims[i], dims[i + 1], act, rng)?);
        }
        MlpNetwork::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    /// Batch forward pass. Fails on width mismatch or non-finite activations
    /// (reported with the offending layer index).
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut trace = self.forward_traced(x)?;
        Ok(trace.outs.pop().expect("network has at least one layer"))
    }

    /// Forward pass keeping per-layer intermediates for backpropagation.
    pub fn forward_traced(&self, x: &Matrix) -> Result<ForwardTrace> {
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut outs = Vec::with_capacity(self.layers.len());
        let mut current = x.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&current)?;
            let a = layer.activate(&z);
            if !a.is_finite() {
                return Err(Error::Numeric {
                    layer: idx,
                    detail: "activation overflow".to_string(),
                });
            }
            current = a.clone();
            zs.push(z);
            outs.push(a);
        }
        Ok(ForwardTrace {
            input: x.clone(),
            zs,
            outs,
        })
    }

    /// Backpropagates `dL/d_output` through the trace, returning parameter
    /// gradients and `dL/d_input`.
    pub fn backward(&self, trace: &ForwardTrace, d_output: &Matrix) -> (NetGradients, Matrix) {
        let n_layers = self.layers.len();
        assert_eq!(d_output.rows(), trace.input.rows(), "batch size mismatch");
        assert_eq!(d_output.cols(), self.output_dim(), "output width mismatch");

        let mut grads: Vec<LayerGradients> = Vec::with_capacity(n_layers);
        let mut d_a = d_output.clone();

        for idx in (0..n_layers).rev() {
            let layer = &self.layers[idx];
            let z = &trace.zs[idx];
            let a = &trace.outs[idx];
            let input = if idx == 0 {
                &trace.input
            } else {
                &trace.outs[idx - 1]
            };

            // d_z = activation backward, row by row.
            let mut d_z = Matrix::zeros(z.rows(), z.cols());
            for r in 0..z.rows() {
                let row = d_z.row_mut(r);
                layer
                    .activation()
                    .backward_row(z.row(r), a.row(r), d_a.row(r), row);
            }

            // d_W = d_z^T * input, d_b = column sums of d_z.
            let d_weights = d_z.transpose().matmul(input).expect("shape by construction");
            let mut d_bias = vec![0.0; layer.out_dim()];
            for r in 0..d_z.rows() {
                for (b, &g) in d_bias.iter_mut().zip(d_z.row(r)) {
                    *b += g;
                }
            }

            // d_input = d_z * W.
            let d_input = d_z.matmul(layer.weights()).expect("shape by construction");

            grads.push(LayerGradients { d_weights, d_bias });
            d_a = d_input;
        }

        grads.reverse();
        (NetGradients { layers: grads }, d_a)
    }

    /// Flat parameter block lengths: weights then bias, per layer.
    pub fn param_shapes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights().data().len(), l.bias().len()])
            .collect()
    }

    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                let (w, b) = l.split_params_mut();
                [w, b]
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().sum()
    }
}

impl NetGradients {
    /// Flat gradient blocks aligned with [`MlpNetwork::param_blocks_mut`].
    pub fn blocks(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.d_weights.data(), l.d_bias.as_slice()])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.d_weights.is_finite() && l.d_bias.iter().all(|v| v.is_finite()))
    }
}

/// Result of one loss-directed backward pass.
#[derive(Debug)]
pub struct BackpropResult {
    pub loss: f64,
    pub grads: NetGradients,
    pub d_input: Matrix,
}

/// Forward, loss, and backward in one call.
pub fn backprop(
    net: &MlpNetwork,
    x: &Matrix,
    loss: &LossSpec,
    targets: &Matrix,
) -> Result<BackpropResult> {
    let trace = net.forward_traced(x)?;
    let output = trace.output();
    let loss_value = loss.evaluate(output, targets)?;
    let d_output = loss.gradient(output, targets)?;
    let (grads, d_input) = net.backward(&trace, &d_output);
    Ok(BackpropResult {
        loss: loss_value,
        grads,
        d_input,
    })
}
