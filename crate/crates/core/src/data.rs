//! Deterministic synthetic datasets, CSV ingestion, feature standardization,
//! and train/test splitting.
//!
//! Tabular classes are sampled from per-class Gaussians (full covariance via
//! Cholesky) plus per-class categorical distributions. Pixel datasets draw
//! two procedural 8x8 glyphs with noise and shift jitter. Everything is a
//! pure function of `(spec, seed)`.

use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::schema::{onehot_encode, CategoricalGroup, FeatureSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Test,
}

/// Encoded dataset: standardized-or-raw continuous columns, exact one-hot
/// blocks, binary labels, and a per-row split tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub rows: Matrix,
    pub labels: Vec<u8>,
    pub split: Vec<Split>,
    /// Present once continuous features have been standardized.
    pub standardizer: Option<Standardizer>,
}

impl Dataset {
    /// Rows and labels of one split.
    pub fn select(&self, split: Split) -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..self.rows.rows() {
            if self.split[i] == split {
                rows.push(self.rows.row(i).to_vec());
                labels.push(self.labels[i]);
            }
        }
        (Matrix::from_rows(&rows).expect("rows share width"), labels)
    }

    /// Rows of one split restricted to one class.
    pub fn select_class(&self, split: Split, label: u8) -> Matrix {
        let mut rows = Vec::new();
        for i in 0..self.rows.rows() {
            if self.split[i] == split && self.labels[i] == label {
                rows.push(self.rows.row(i).to_vec());
            }
        }
        Matrix::from_rows(&rows).expect("rows share width")
    }

    /// Fits a standardizer on the train split and rescales every continuous
    /// column in place. No-op for pixel data, which stays in `[0, 1]`.
    pub fn standardize(&mut self) -> Result<()> {
        if self.schema.pixel_mode {
            return Ok(());
        }
        if self.standardizer.is_some() {
            return Err(Error::contract("dataset is already standardized"));
        }
        let (train_rows, _) = self.select(Split::Train);
        let standardizer = Standardizer::fit(&train_rows, self.schema.continuous_count())?;
        for r in 0..self.rows.rows() {
            standardizer.apply_row(self.rows.row_mut(r));
        }
        self.standardizer = Some(standardizer);
        Ok(())
    }
}

/// Per-feature affine rescaling fit on the train split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    /// Fits mean and (population) standard deviation of the first
    /// `continuous` columns. Rejects constant features.
    pub fn fit(rows: &Matrix, continuous: usize) -> Result<Self> {
        if rows.rows() < 2 {
            return Err(Error::contract("standardizer needs at least 2 rows"));
        }
        let n = rows.rows() as f64;
        let mut means = vec![0.0; continuous];
        let mut stds = vec![0.0; continuous];
        for c in 0..continuous {
            let mut sum = 0.0;
            for r in 0..rows.rows() {
                sum += rows.get(r, c);
            }
            means[c] = sum / n;
            let mut var = 0.0;
            for r in 0..rows.rows() {
                let d = rows.get(r, c) - means[c];
                var += d * d;
            }
            stds[c] = (var / n).sqrt();
            if stds[c] < 1e-12 {
                return Err(Error::contract(format!(
                    "continuous feature {c} is constant"
                )));
            }
        }
        Ok(Standardizer { means, stds })
    }

    /// Standardizes the continuous prefix of an encoded row in place.
    pub fn apply_row(&self, row: &mut [f64]) {
        for (c, (m, s)) in self.means.iter().zip(&self.stds).enumerate() {
            row[c] = (row[c] - m) / s;
        }
    }

    /// Undoes [`Standardizer::apply_row`].
    pub fn inverse_row(&self, row: &mut [f64]) {
        for (c, (m, s)) in self.means.iter().zip(&self.stds).enumerate() {
            row[c] = row[c] * s + m;
        }
    }
}

/// Covariance of one Gaussian class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovarianceSpec {
    /// `sigma^2 * I`.
    Spherical(f64),
    /// Independent per-feature variances.
    Diagonal(Vec<f64>),
    /// Full symmetric positive semi-definite matrix.
    Full(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GaussianClassSpec {
    pub size: usize,
    pub mean: Vec<f64>,
    pub covariance: CovarianceSpec,
}

/// One categorical variable with a probability vector per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CategoricalSpec {
    pub name: String,
    pub class_probs: [Vec<f64>; 2],
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_glyph_side() -> usize {
    8
}

fn default_shift_jitter() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TabularSpec {
    /// Optional names for the continuous features; `f0..` otherwise.
    #[serde(default)]
    pub feature_names: Option<Vec<String>>,
    pub class0: GaussianClassSpec,
    pub class1: GaussianClassSpec,
    #[serde(default)]
    pub categorical: Vec<CategoricalSpec>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

/// Two procedurally drawn glyph classes (a plus sign and a hollow box) with
/// Gaussian pixel noise and integer shift jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PixelSpec {
    #[serde(default = "default_glyph_side")]
    pub side: usize,
    pub class0_size: usize,
    pub class1_size: usize,
    pub noise: f64,
    #[serde(default = "default_shift_jitter")]
    pub shift_jitter: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticSpec {
    Tabular(TabularSpec),
    Pixels(PixelSpec),
}

/// Lower-triangular Cholesky factor, tolerating semi-definite input.
#[allow(clippy::needless_range_loop)]
fn cholesky(cov: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = cov.len();
    for (i, row) in cov.iter().enumerate() {
        if row.len() != n {
            return Err(Error::contract("covariance matrix is not square"));
        }
        for j in 0..n {
            if (cov[i][j] - cov[j][i]).abs() > 1e-9 {
                return Err(Error::contract("covariance matrix is not symmetric"));
            }
        }
    }
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = cov[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d < -1e-10 {
            return Err(Error::contract(
                "covariance matrix is not positive semi-definite",
            ));
        }
        l[j][j] = d.max(0.0).sqrt();
        for i in (j + 1)..n {
            let mut s = cov[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if l[j][j] > 1e-12 {
                l[i][j] = s / l[j][j];
            } else if s.abs() > 1e-8 {
                return Err(Error::contract(
                    "covariance matrix is not positive semi-definite",
                ));
            }
        }
    }
    Ok(l)
}

impl CovarianceSpec {
    fn to_full(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            CovarianceSpec::Spherical(v) => {
                if *v < 0.0 {
                    return Err(Error::contract("variance must be >= 0"));
                }
                let mut m = vec![vec![0.0; dim]; dim];
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = *v;
                }
                Ok(m)
            }
            CovarianceSpec::Diagonal(vs) => {
                if vs.len() != dim {
                    return Err(Error::contract("diagonal covariance length mismatch"));
                }
                if vs.iter().any(|&v| v < 0.0) {
                    return Err(Error::contract("variance must be >= 0"));
                }
                let mut m = vec![vec![0.0; dim]; dim];
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = vs[i];
                }
                Ok(m)
            }
            CovarianceSpec::Full(m) => {
                if m.len() != dim {
                    return Err(Error::contract("full covariance dimension mismatch"));
                }
                Ok(m.clone())
            }
        }
    }
}

fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Generates an unstandardized dataset from a spec, fully determined by
/// `(spec, seed)`: rows, labels, and the stratified 80/20-style split.
pub fn generate_synthetic_dataset(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    match spec {
        SyntheticSpec::Tabular(t) => generate_tabular(t, seed),
        SyntheticSpec::Pixels(p) => generate_pixels(p, seed),
    }
}

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.len() < 2 {
        return Err(Error::contract("categorical needs cardinality >= 2"));
    }
    if probs.iter().any(|&p| p < 0.0) {
        return Err(Error::contract("categorical probabilities must be >= 0"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::contract(format!(
            "categorical probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

fn generate_tabular(spec: &TabularSpec, seed: u64) -> Result<Dataset> {
    let dim = spec.class0.mean.len();
    if spec.class1.mean.len() != dim {
        return Err(Error::contract("class means have different lengths"));
    }
    if spec.class0.size == 0 || spec.class1.size == 0 {
        return Err(Error::contract("class sizes must be positive"));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::contract("train fraction must be in (0, 1)"));
    }
    for cat in &spec.categorical {
        validate_probs(&cat.class_probs[0])?;
        validate_probs(&cat.class_probs[1])?;
        if cat.class_probs[0].len() != cat.class_probs[1].len() {
            return Err(Error::contract(format!(
                "categorical '{}' has inconsistent cardinalities",
                cat.name
            )));
        }
    }

    let names = match &spec.feature_names {
        Some(names) => {
            if names.len() != dim {
                return Err(Error::contract("feature name count mismatch"));
            }
            names.clone()
        }
        None => (0..dim).map(|i| format!("f{i}")).collect(),
    };
    let schema = FeatureSchema {
        continuous: names,
        categorical: spec
            .categorical
            .iter()
            .map(|c| CategoricalGroup {
                name: c.name.clone(),
                cardinality: c.class_probs[0].len(),
            })
            .collect(),
        pixel_mode: false,
    };
    schema.validate()?;

    let chol0 = cholesky(&spec.class0.covariance.to_full(dim)?)?;
    let chol1 = cholesky(&spec.class1.covariance.to_full(dim)?)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(spec.class0.size + spec.class1.size);
    let mut labels: Vec<u8> = Vec::with_capacity(rows.capacity());

    for (label, class, chol) in [
        (0u8, &spec.class0, &chol0),
        (1u8, &spec.class1, &chol1),
    ] {
        for _ in 0..class.size {
            let normals: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let mut row: Vec<f64> = (0..dim)
                .map(|i| {
                    let mut v = class.mean[i];
                    for (k, n) in normals.iter().enumerate().take(i + 1) {
                        v += chol[i][k] * n;
                    }
                    v
                })
                .collect();
            for cat in &spec.categorical {
                let idx = sample_categorical(&cat.class_probs[label as usize], &mut rng);
                row.extend(onehot_encode(idx, cat.class_probs[0].len())?);
            }
            rows.push(row);
            labels.push(label);
        }
    }

    let split = stratified_split(&labels, spec.train_fraction, &mut rng);
    Ok(Dataset {
        schema,
        rows: Matrix::from_rows(&rows)?,
        labels,
        split,
        standardizer: None,
    })
}

/// Per-class shuffled split: the first `fraction` of each class is train.
fn stratified_split<R: Rng + ?Sized>(labels: &[u8], fraction: f64, rng: &mut R) -> Vec<Split> {
    let mut split = vec![Split::Test; labels.len()];
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        idx.shuffle(rng);
        let n_train = ((idx.len() as f64) * fraction).round() as usize;
        for &i in idx.iter().take(n_train) {
            split[i] = Split::Train;
        }
    }
    split
}

fn glyph(class: u8, side: usize) -> Vec<f64> {
    let mut img = vec![0.0; side * side];
    let mid = side / 2;
    match class {
        0 => {
            // Plus sign: two-pixel-wide bars through the middle.
            for r in 0..side {
                img[r * side + mid - 1] = 1.0;
                img[r * side + mid] = 1.0;
            }
            for c in 0..side {
                img[(mid - 1) * side + c] = 1.0;
                img[mid * side + c] = 1.0;
            }
        }
        _ => {
            // Hollow box with a one-pixel margin.
            for i in 1..side - 1 {
                img[side + i] = 1.0;
                img[(side - 2) * side + i] = 1.0;
                img[i * side + 1] = 1.0;
                img[i * side + side - 2] = 1.0;
            }
        }
    }
    img
}

fn generate_pixels(spec: &PixelSpec, seed: u64) -> Result<Dataset> {
    if spec.side < 4 {
        return Err(Error::contract("glyph side must be >= 4"));
    }
    if spec.class0_size == 0 || spec.class1_size == 0 {
        return Err(Error::contract("class sizes must be positive"));
    }
    if spec.noise < 0.0 {
        return Err(Error::contract("noise must be >= 0"));
    }
    let side = spec.side;
    let schema = FeatureSchema::pixels(side);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut rows = Vec::with_capacity(spec.class0_size + spec.class1_size);
    let mut labels = Vec::with_capacity(rows.capacity());
    for (label, count) in [(0u8, spec.class0_size), (1u8, spec.class1_size)] {
        let base = glyph(label, side);
        for _ in 0..count {
            let j = spec.shift_jitter as i64;
            let (dx, dy) = if j > 0 {
                (rng.gen_range(-j..=j), rng.gen_range(-j..=j))
            } else {
                (0, 0)
            };
            let mut img = vec![0.0; side * side];
            for r in 0..side as i64 {
                for c in 0..side as i64 {
                    let (sr, sc) = (r - dy, c - dx);
                    if (0..side as i64).contains(&sr) && (0..side as i64).contains(&sc) {
                        img[(r * side as i64 + c) as usize] =
                            base[(sr * side as i64 + sc) as usize];
                    }
                }
            }
            for px in &mut img {
                let n: f64 = rng.sample(StandardNormal);
                *px = (*px + spec.noise * n).clamp(0.0, 1.0);
            }
            rows.push(img);
            labels.push(label);
        }
    }

    let split = stratified_split(&labels, spec.train_fraction, &mut rng);
    Ok(Dataset {
        schema,
        rows: Matrix::from_rows(&rows)?,
        labels,
        split,
        standardizer: None,
    })
}

/// Parses the `name:type` tagged CSV format: `f:cont` columns hold reals,
/// `f:cat{k}` columns hold category indices `0..k`, and exactly one `label`
/// column holds `0`/`1`. Returns an unsplit, unstandardized dataset.
pub fn read_csv<R: Read>(reader: R) -> Result<(FeatureSchema, Matrix, Vec<u8>)> {
    #[derive(Clone)]
    enum Col {
        Continuous(usize),
        Categorical { group: usize, cardinality: usize },
        Label,
    }

    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = csv_reader.headers()?.clone();
    let mut columns = Vec::with_capacity(headers.len());
    let mut continuous_names = Vec::new();
    let mut groups = Vec::new();
    let mut label_seen = false;

    for h in headers.iter() {
        if h == "label" {
            if label_seen {
                return Err(Error::contract("duplicate label column"));
            }
            label_seen = true;
            columns.push(Col::Label);
        } else if let Some((name, ty)) = h.split_once(':') {
            if ty == "cont" {
                columns.push(Col::Continuous(continuous_names.len()));
                continuous_names.push(name.to_string());
            } else if let Some(k) = ty
                .strip_prefix("cat{")
                .and_then(|rest| rest.strip_suffix('}'))
            {
                let cardinality: usize = k
                    .parse()
                    .map_err(|_| Error::contract(format!("bad cardinality in column '{h}'")))?;
                columns.push(Col::Categorical {
                    group: groups.len(),
                    cardinality,
                });
                groups.push(CategoricalGroup {
                    name: name.to_string(),
                    cardinality,
                });
            } else {
                return Err(Error::contract(format!("unknown column type '{ty}'")));
            }
        } else {
            return Err(Error::contract(format!(
                "column '{h}' is missing a :type tag"
            )));
        }
    }
    if !label_seen {
        return Err(Error::contract("csv needs a label column"));
    }

    let schema = FeatureSchema {
        continuous: continuous_names,
        categorical: groups,
        pixel_mode: false,
    };
    schema.validate()?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in csv_reader.records().enumerate() {
        let record = record?;
        if record.len() != columns.len() {
            return Err(Error::contract(format!(
                "row {line} has {} cells, expected {}",
                record.len(),
                columns.len()
            )));
        }
        let mut cont = vec![0.0; schema.continuous_count()];
        let mut cats = vec![0usize; schema.categorical.len()];
        let mut label = 0u8;
        for (cell, col) in record.iter().zip(&columns) {
            match col {
                Col::Continuous(i) => {
                    cont[*i] = cell.parse().map_err(|_| {
                        Error::contract(format!("row {line}: bad real value '{cell}'"))
                    })?;
                }
                Col::Categorical { group, cardinality } => {
                    let idx: usize = cell.parse().map_err(|_| {
                        Error::contract(format!("row {line}: bad category '{cell}'"))
                    })?;
                    if idx >= *cardinality {
                        return Err(Error::contract(format!(
                            "row {line}: category {idx} out of range {cardinality}"
                        )));
                    }
                    cats[*group] = idx;
                }
                Col::Label => {
                    label = match cell {
                        "0" => 0,
                        "1" => 1,
                        _ => {
                            return Err(Error::contract(format!(
                                "row {line}: label must be 0 or 1, got '{cell}'"
                            )))
                        }
                    };
                }
            }
        }
        let mut row = cont;
        for (g, &idx) in cats.iter().enumerate() {
            row.extend(onehot_encode(idx, schema.categorical[g].cardinality)?);
        }
        rows.push(row);
        labels.push(label);
    }

    Ok((schema, Matrix::from_rows(&rows)?, labels))
}

/// Reads a tagged CSV file and splits it with the seeded stratified rule.
pub fn dataset_from_csv(path: &Path, train_fraction: f64, seed: u64) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let (schema, rows, labels) = read_csv(file)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let split = stratified_split(&labels, train_fraction, &mut rng);
    Ok(Dataset {
        schema,
        rows,
        labels,
        split,
        standardizer: None,
    })
}
