//! Activation functions, including softmax over explicit column groups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A contiguous block of output columns, `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub start: usize,
    pub len: usize,
}

impl Block {
    pub fn new(start: usize, len: usize) -> Self {
        Block { start, len }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }
}

/// Checks that blocks are non-empty, sorted, disjoint, and inside `width`.
pub fn validate_blocks(blocks: &[Block], width: usize) -> Result<()> {
    let mut cursor = 0usize;
    for b in blocks {
        if b.len == 0 {
            return Err(Error::contract("empty softmax group"));
        }
        if b.start < cursor {
            return Err(Error::contract("softmax groups overlap or are unsorted"));
        }
        if b.end() > width {
            return Err(Error::contract(format!(
                "softmax group {}..{} exceeds width {width}",
                b.start,
                b.end()
            )));
        }
        cursor = b.end();
    }
    Ok(())
}

/// Activation applied elementwise to a layer's pre-activations, except for
/// `SoftmaxGrouped`, which normalizes each listed column block to a
/// probability simplex and passes the remaining columns through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    Tanh,
    SoftmaxGrouped { groups: Vec<Block> },
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn validate(&self, width: usize) -> Result<()> {
        if let Activation::SoftmaxGrouped { groups } = self {
            validate_blocks(groups, width)?;
        }
        Ok(())
    }

    /// Applies the activation to one row of pre-activations.
    pub fn apply_row(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(z.len(), out.len());
        match self {
            Activation::Identity => out.copy_from_slice(z),
            Activation::Relu => {
                for (o, &v) in out.iter_mut().zip(z) {
                    *o = if v > 0.0 { v } else { 0.0 };
                }
            }
            Activation::Sigmoid => {
                for (o, &v) in out.iter_mut().zip(z) {
                    *o = sigmoid(v);
                }
            }
            Activation::Tanh => {
                for (o, &v) in out.iter_mut().zip(z) {
                    *o = v.tanh();
                }
            }
            Activation::SoftmaxGrouped { groups } => {
                out.copy_from_slice(z);
                for g in groups {
                    let block = &mut out[g.range()];
                    let max = block.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for v in block.iter_mut() {
                        *v = (*v - max).exp();
                        sum += *v;
                    }
                    for v in block.iter_mut() {
                        *v /= sum;
                    }
                }
            }
        }
    }

    /// Chain rule through the activation for one row: given pre-activations
    /// `z`, outputs `a`, and upstream gradient `d_a`, writes `dL/dz`.
    pub fn backward_row(&self, z: &[f64], a: &[f64], d_a: &[f64], d_z: &mut [f64]) {
        match self {
            Activation::Identity => d_z.copy_from_slice(d_a),
            Activation::Relu => {
                for ((o, &zi), &g) in d_z.iter_mut().zip(z).zip(d_a) {
                    *o = if zi > 0.0 { g } else { 0.0 };
                }
            }
            Activation::Sigmoid => {
                for ((o, &ai), &g) in d_z.iter_mut().zip(a).zip(d_a) {
                    *o = g * ai * (1.0 - ai);
                }
            }
            Activation::Tanh => {
                for ((o, &ai), &g) in d_z.iter_mut().zip(a).zip(d_a) {
                    *o = g * (1.0 - ai * ai);
                }
            }
            Activation::SoftmaxGrouped { groups } => {
                // Identity outside the groups, full softmax Jacobian inside.
                d_z.copy_from_slice(d_a);
                for g in groups {
                    let r = g.range();
                    let dot: f64 = d_a[r.clone()]
                        .iter()
                        .zip(&a[r.clone()])
                        .map(|(&g_i, &a_i)| g_i * a_i)
                        .sum();
                    for i in r {
                        d_z[i] = a[i] * (d_a[i] - dot);
                    }
                }
            }
        }
    }
}
