//! Dense layer: `a = activation(x W^T + b)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::activation::Activation;

/// One affine transform plus activation. Weights are `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    weights: Matrix,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    /// Builds a layer from explicit parameters.
    pub fn from_parts(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.rows() != bias.len() {
            return Err(Error::shape(format!(
                "bias length {} does not match output dim {}",
                bias.len(),
                weights.rows()
            )));
        }
        activation.validate(weights.rows())?;
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    /// Glorot-uniform initialization: weights in `[-s, s]` with
    /// `s = sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::contract("layer dims must be positive"));
        }
        let s = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data: Vec<f64> = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-s..=s))
            .collect();
        Self::from_parts(
            Matrix::from_vec(out_dim, in_dim, data)?,
            vec![0.0; out_dim],
            activation,
        )
    }

    /// Identity map: unit weights on the diagonal, zero bias.
    pub fn identity(dim: usize) -> Self {
        let mut w = Matrix::zeros(dim, dim);
        for i in 0..dim {
            w.set(i, i, 1.0);
        }
        DenseLayer {
            weights: w,
            bias: vec![0.0; dim],
            activation: Activation::Identity,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Disjoint mutable views of the weight and bias buffers.
    pub(crate) fn split_params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (self.weights.data_mut(), &mut self.bias)
    }

    /// Pre-activations for a batch: `z = x W^T + b`.
    pub fn affine(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.in_dim() {
            return Err(Error::shape(format!(
                "input width {} does not match layer in_dim {}",
                x.cols(),
                self.in_dim()
            )));
        }
        let mut z = Matrix::zeros(x.rows(), self.out_dim());
        for r in 0..x.rows() {
            let xr = x.row(r);
            let zr = z.row_mut(r);
            for (o, z_o) in zr.iter_mut().enumerate() {
                let wrow = self.weights.row(o);
                let mut sum = self.bias[o];
                for (w, xv) in wrow.iter().zip(xr) {
                    sum += w * xv;
                }
                *z_o = sum;
            }
        }
        Ok(z)
    }

    /// Activation applied row by row.
    pub fn activate(&self, z: &Matrix) -> Matrix {
        let mut a = Matrix::zeros(z.rows(), z.cols());
        for r in 0..z.rows() {
            let (zr, ar) = (z.row(r).to_vec(), a.row_mut(r));
            self.activation.apply_row(&zr, ar);
        }
        a
    }
}
