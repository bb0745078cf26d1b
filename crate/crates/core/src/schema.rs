//! Feature schema for mixed tabular and pixel data.
//!
//! Encoded layout is always `[continuous features | one-hot group 0 | ...]`.
//! Pixel datasets are a degenerate case: every pixel is a continuous feature
//! in `[0, 1]` and categorical groups are not allowed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::activation::{Activation, Block};

/// One categorical variable, stored one-hot with `cardinality` columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalGroup {
    pub name: String,
    pub cardinality: usize,
}

/// Describes how encoded rows map back to named features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FeatureSchema {
    pub continuous: Vec<String>,
    pub categorical: Vec<CategoricalGroup>,
    pub pixel_mode: bool,
}

impl FeatureSchema {
    pub fn continuous_only(names: Vec<String>) -> Self {
        FeatureSchema {
            continuous: names,
            categorical: Vec::new(),
            pixel_mode: false,
        }
    }

    /// Schema for a `side x side` grayscale image.
    pub fn pixels(side: usize) -> Self {
        FeatureSchema {
            continuous: (0..side * side).map(|i| format!("px{i:02}")).collect(),
            categorical: Vec::new(),
            pixel_mode: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pixel_mode && !self.categorical.is_empty() {
            return Err(Error::contract(
                "pixel mode excludes categorical groups",
            ));
        }
        if self.categorical.iter().any(|g| g.cardinality < 2) {
            return Err(Error::contract("categorical cardinality must be >= 2"));
        }
        if self.input_dim() == 0 {
            return Err(Error::contract("schema has no features"));
        }
        Ok(())
    }

    /// Width of an encoded row.
    pub fn input_dim(&self) -> usize {
        self.continuous.len() + self.categorical.iter().map(|g| g.cardinality).sum::<usize>()
    }

    pub fn continuous_count(&self) -> usize {
        self.continuous.len()
    }

    /// Column block of one-hot group `i` in the encoded layout.
    pub fn group_block(&self, i: usize) -> Block {
        let mut start = self.continuous.len();
        for g in &self.categorical[..i] {
            start += g.cardinality;
        }
        Block::new(start, self.categorical[i].cardinality)
    }

    pub fn group_blocks(&self) -> Vec<Block> {
        (0..self.categorical.len())
            .map(|i| self.group_block(i))
            .collect()
    }

    /// Output activation for a decoder that reconstructs this schema:
    /// sigmoid for pixels, grouped softmax over the one-hot blocks (with
    /// identity on the continuous columns) for mixed tabular data.
    pub fn decoder_activation(&self) -> Activation {
        if self.pixel_mode {
            Activation::Sigmoid
        } else if self.categorical.is_empty() {
            Activation::Identity
        } else {
            Activation::SoftmaxGrouped {
                groups: self.group_blocks(),
            }
        }
    }

    /// Name of every encoded column: continuous names, then `group=i` per
    /// one-hot slot.
    pub fn encoded_columns(&self) -> Vec<String> {
        let mut names = self.continuous.clone();
        for g in &self.categorical {
            for i in 0..g.cardinality {
                names.push(format!("{}={i}", g.name));
            }
        }
        names
    }

    /// Replaces each categorical block with the one-hot vector of its argmax,
    /// making a decoded row schema-valid. Continuous columns pass through.
    pub fn round_categoricals(&self, row: &[f64]) -> Vec<f64> {
        let mut out = row.to_vec();
        for i in 0..self.categorical.len() {
            let block = self.group_block(i);
            let idx = argmax(&row[block.range()]);
            for (k, v) in out[block.range()].iter_mut().enumerate() {
                *v = if k == idx { 1.0 } else { 0.0 };
            }
        }
        out
    }

    /// Checks every categorical block sums to one (within `tol`) with
    /// non-negative entries.
    pub fn check_simplex_blocks(&self, row: &[f64], tol: f64) -> Result<()> {
        for i in 0..self.categorical.len() {
            let block = self.group_block(i);
            let vals = &row[block.range()];
            let sum: f64 = vals.iter().sum();
            if (sum - 1.0).abs() > tol || vals.iter().any(|&v| v < -tol) {
                return Err(Error::contract(format!(
                    "categorical block '{}' is not normalized (sum {sum})",
                    self.categorical[i].name
                )));
            }
        }
        Ok(())
    }
}

/// Index of the largest entry, lowest index winning ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// One-hot encodes `index` into a vector of length `cardinality`.
pub fn onehot_encode(index: usize, cardinality: usize) -> Result<Vec<f64>> {
    if index >= cardinality {
        return Err(Error::contract(format!(
            "category index {index} out of range for cardinality {cardinality}"
        )));
    }
    let mut v = vec![0.0; cardinality];
    v[index] = 1.0;
    Ok(v)
}

/// Decodes a simplex vector to its category: argmax, lowest index on ties.
pub fn onehot_decode(values: &[f64]) -> usize {
    argmax(values)
}
