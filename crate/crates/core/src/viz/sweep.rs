//! Hyperparameter grid sweep over (KL weight, latent dimension) with
//! Pareto-front extraction on the two training objectives.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierModel;
use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::vae::{train_vae, VaeModel, VaeRole, VaeTrainConfig};

/// One grid cell's outcome. Objective fields are `None` when that cell's
/// training diverged; diverged cells never reach the front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepRecord {
    pub beta: f64,
    pub latent_dim: usize,
    /// Final reconstruction error on the test split.
    pub reconstruction: Option<f64>,
    /// Final KL divergence on the test split.
    pub kl: Option<f64>,
    /// Mean classifier score of reconstructed test base-class samples.
    pub projected_base_probability: Option<f64>,
    pub diverged: bool,
    pub on_front: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepConfig {
    pub hidden: Vec<usize>,
    pub categorical_weight: f64,
    pub role: VaeRole,
    pub epochs: usize,
    pub batch_size: usize,
    /// Base seed; each cell trains with a seed derived from it and the cell
    /// index, so cells are independent and parallelizable.
    pub seed: u64,
    pub learning_rate: f64,
}

/// splitmix64 step, used to give every sweep cell its own seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains one fresh VAE per `(beta, latent_dim)` cell and records its test
/// objectives; the non-dominated subset in (reconstruction, kl) minimization
/// is flagged `on_front`.
///
/// The projected-base probability column is reported for context but takes
/// no part in the front.
pub fn sweep_and_pareto(
    dataset: &Dataset,
    classifier: &ClassifierModel,
    betas: &[f64],
    latent_dims: &[usize],
    cfg: &SweepConfig,
) -> Result<Vec<SweepRecord>> {
    if betas.is_empty() || latent_dims.is_empty() {
        return Err(Error::contract("sweep grids must be non-empty"));
    }
    let train_rows = match cfg.role {
        VaeRole::Target => dataset.select_class(Split::Train, 1),
        VaeRole::Unified => dataset.select(Split::Train).0,
    };
    let (test_rows, test_labels) = dataset.select(Split::Test);
    let test_base: Vec<Vec<f64>> = (0..test_rows.rows())
        .filter(|&i| test_labels[i] == 0)
        .map(|i| test_rows.row(i).to_vec())
        .collect();
    if test_base.is_empty() {
        return Err(Error::contract("sweep needs base-class rows in the test split"));
    }
    let test_base = Matrix::from_rows(&test_base)?;

    let mut records = Vec::with_capacity(betas.len() * latent_dims.len());
    for (cell, (beta, latent_dim)) in betas
        .iter()
        .flat_map(|b| latent_dims.iter().map(move |d| (*b, *d)))
        .enumerate()
    {
        let seed = derive_seed(cfg.seed, cell as u64);
        let record = run_cell(
            dataset,
            classifier,
            &train_rows,
            &test_rows,
            &test_base,
            beta,
            latent_dim,
            seed,
            cfg,
        );
        records.push(match record {
            Ok(r) => r,
            Err(Error::Diverged { .. }) | Err(Error::Numeric { .. }) => SweepRecord {
                beta,
                latent_dim,
                reconstruction: None,
                kl: None,
                projected_base_probability: None,
                diverged: true,
                on_front: false,
            },
            Err(e) => return Err(e),
        });
    }

    let candidates: Vec<(usize, f64, f64)> = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| match (r.reconstruction, r.kl) {
            (Some(rec), Some(kl)) => Some((i, rec, kl)),
            _ => None,
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::contract("every sweep cell diverged"));
    }
    let flags = pareto_front_flags(
        &candidates
            .iter()
            .map(|&(_, r, k)| (r, k))
            .collect::<Vec<_>>(),
    );
    for (&(idx, _, _), flag) in candidates.iter().zip(flags) {
        records[idx].on_front = flag;
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    dataset: &Dataset,
    classifier: &ClassifierModel,
    train_rows: &Matrix,
    test_rows: &Matrix,
    test_base: &Matrix,
    beta: f64,
    latent_dim: usize,
    seed: u64,
    cfg: &SweepConfig,
) -> Result<SweepRecord> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut vae = VaeModel::glorot(
        dataset.schema.clone(),
        &cfg.hidden,
        latent_dim,
        beta,
        cfg.categorical_weight,
        cfg.role,
        &mut rng,
    )?;
    train_vae(
        &mut vae,
        train_rows,
        &VaeTrainConfig {
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            seed: derive_seed(seed, 1),
            optimizer: crate::nn::AdamConfig::with_learning_rate(cfg.learning_rate),
        },
    )?;

    let test_loss = vae.deterministic_elbo(test_rows)?;
    let projected = vae.reconstruct_mean(test_base)?;
    let scores = classifier.classify(&projected)?;
    let mean_prob = scores.iter().sum::<f64>() / scores.len() as f64;

    Ok(SweepRecord {
        beta,
        latent_dim,
        reconstruction: Some(test_loss.reconstruction),
        kl: Some(test_loss.kl),
        projected_base_probability: Some(mean_prob),
        diverged: false,
        on_front: false,
    })
}

/// Non-dominated subset under joint minimization of both coordinates,
/// deduplicated by value: for each input point, `true` iff it is the first
/// occurrence of a point no other point dominates.
///
/// Sort-and-scan; the quadratic dominance check lives in the tests.
pub fn pareto_front_flags(points: &[(f64, f64)]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .partial_cmp(&points[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut flags = vec![false; points.len()];
    let mut best_second = f64::INFINITY;
    let mut last_kept: Option<(f64, f64)> = None;
    for &i in &order {
        let (x, y) = points[i];
        if Some((x, y)) == last_kept {
            continue; // exact duplicate of a front member
        }
        if y < best_second {
            flags[i] = true;
            best_second = y;
            last_kept = Some((x, y));
        }
    }
    flags
}
