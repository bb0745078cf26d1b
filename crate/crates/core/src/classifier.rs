//! Binary probabilistic classifier `f(x) -> p(target)` plus AUC evaluation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{AdamConfig, AdamState, Activation, LossSpec, MlpNetwork};
use crate::schema::FeatureSchema;

/// Reported probabilities are clamped into `[SCORE_CLAMP, 1 - SCORE_CLAMP]`
/// so callers always see values strictly inside (0, 1).
pub const SCORE_CLAMP: f64 = 1e-9;

/// Anything that can score a sample with a target-class probability.
///
/// Counterfactual generators are written against this trait, so scripted
/// score curves and black-box models plug in alongside [`ClassifierModel`].
pub trait Scorer: Sync {
    fn score(&self, x: &[f64]) -> Result<f64>;

    /// Analytic gradient of the score with respect to the input, when the
    /// model can provide one. The default is a black box.
    fn score_gradient(&self, _x: &[f64]) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }
}

impl<F> Scorer for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(self(x))
    }
}

/// MLP ending in a single sigmoid output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    net: MlpNetwork,
    schema: FeatureSchema,
}

impl ClassifierModel {
    pub fn new(net: MlpNetwork, schema: FeatureSchema) -> Result<Self> {
        schema.validate()?;
        if net.input_dim() != schema.input_dim() {
            return Err(Error::shape(format!(
                "classifier input {} does not match schema dim {}",
                net.input_dim(),
                schema.input_dim()
            )));
        }
        if net.output_dim() != 1 {
            return Err(Error::shape("classifier must emit one output".to_string()));
        }
        if !matches!(
            net.layers().last().unwrap().activation(),
            Activation::Sigmoid
        ) {
            return Err(Error::contract("classifier output must be sigmoid"));
        }
        Ok(ClassifierModel { net, schema })
    }

    pub fn glorot<R: Rng + ?Sized>(
        schema: FeatureSchema,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let mut dims = vec![schema.input_dim()];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut acts = vec![Activation::Tanh; hidden.len()];
        acts.push(Activation::Sigmoid);
        let net = MlpNetwork::glorot(&dims, acts, rng)?;
        ClassifierModel::new(net, schema)
    }

    pub fn net(&self) -> &MlpNetwork {
        &self.net
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    /// One probability per row, strictly inside (0, 1).
    pub fn classify(&self, x: &Matrix) -> Result<Vec<f64>> {
        let out = self.net.forward(x)?;
        Ok(out
            .data()
            .iter()
            .map(|&p| p.clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP))
            .collect())
    }

    pub fn score_row(&self, x: &[f64]) -> Result<f64> {
        Ok(self.classify(&Matrix::from_row(x)?)?[0])
    }
}

impl Scorer for ClassifierModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        self.score_row(x)
    }

    fn score_gradient(&self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        let trace = self.net.forward_traced(&Matrix::from_row(x)?)?;
        let ones = Matrix::from_vec(1, 1, vec![1.0])?;
        let (_, d_input) = self.net.backward(&trace, &ones);
        Ok(Some(d_input.row(0).to_vec()))
    }
}

/// Trains the classifier in place with full-batch binary cross entropy and
/// Adam, returning the per-epoch loss.
pub fn train_classifier(
    model: &mut ClassifierModel,
    x: &Matrix,
    labels: &[u8],
    epochs: usize,
    seed: u64,
    optimizer: AdamConfig,
) -> Result<Vec<f64>> {
    if x.rows() == 0 {
        return Err(Error::contract("training dataset is empty"));
    }
    if x.rows() != labels.len() {
        return Err(Error::shape(format!(
            "{} rows vs {} labels",
            x.rows(),
            labels.len()
        )));
    }
    if labels.iter().all(|&l| l == 0) || labels.iter().all(|&l| l == 1) {
        return Err(Error::contract(
            "classifier training needs both classes present",
        ));
    }

    // The seed keeps the signature future-proof for stochastic batching; the
    // full-batch loop itself is order-independent.
    let _rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = Matrix::from_vec(
        labels.len(),
        1,
        labels.iter().map(|&l| f64::from(l)).collect(),
    )?;

    let shapes = model.net.param_shapes();
    let mut adam = AdamState::new(optimizer, &shapes);
    let mut history = Vec::with_capacity(epochs);

    for epoch in 0..epochs {
        let result = crate::nn::backprop(&model.net, x, &LossSpec::BinaryCrossEntropy, &targets)?;
        if !result.loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let grad_blocks = result.grads.blocks();
        let mut params = model.net.param_blocks_mut();
        adam.apply(&mut params, &grad_blocks)?;
        history.push(result.loss);
    }
    Ok(history)
}

/// Area under the ROC curve by exhaustive pairwise comparison, ties counted
/// as one half. Needs both classes present.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(&s, _)| s)
        .collect();
    let negatives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 0)
        .map(|(&s, _)| s)
        .collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::contract("auc needs both classes present"));
    }
    let mut concordant = 0.0;
    for &p in &positives {
        for &n in &negatives {
            if p > n {
                concordant += 1.0;
            } else if p == n {
                concordant += 0.5;
            }
        }
    }
    Ok(concordant / (positives.len() * negatives.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DenseLayer;

    fn schema(dim: usize) -> FeatureSchema {
        FeatureSchema::continuous_only((0..dim).map(|i| format!("f{i}")).collect())
    }

    fn linear_classifier(w: Vec<f64>, b: f64) -> ClassifierModel {
        let dim = w.len();
        let net = MlpNetwork::new(vec![DenseLayer::from_parts(
            Matrix::from_vec(1, dim, w).unwrap(),
            vec![b],
            Activation::Sigmoid,
        )
        .unwrap()])
        .unwrap();
        ClassifierModel::new(net, schema(dim)).unwrap()
    }

    #[test]
    fn zero_weight_net_scores_half() {
        let model = linear_classifier(vec![0.0, 0.0], 0.0);
        let x = Matrix::from_vec(3, 2, vec![1.0, -5.0, 0.0, 0.0, 100.0, 3.0]).unwrap();
        for p in model.classify(&x).unwrap() {
            assert_eq!(p, 0.5);
        }
    }

    #[test]
    fn sigmoid_closed_forms() {
        let model = linear_classifier(vec![1.0], 0.0);
        assert_eq!(model.score_row(&[0.0]).unwrap(), 0.5);
        let p = model.score_row(&[3.0f64.ln()]).unwrap();
        assert!((p - 0.75).abs() < 1e-12);
    }

    #[test]
    fn scores_stay_strictly_inside_unit_interval() {
        let model = linear_classifier(vec![1.0], 0.0);
        let hi = model.score_row(&[1e4]).unwrap();
        let lo = model.score_row(&[-1e4]).unwrap();
        assert!((1.0 - SCORE_CLAMP - 1e-18..1.0).contains(&hi));
        assert!(lo > 0.0 && lo <= SCORE_CLAMP + 1e-18);
    }

    #[test]
    fn classify_is_row_independent() {
        let model = linear_classifier(vec![0.7, -0.3], 0.1);
        let x = Matrix::from_vec(2, 2, vec![0.5, 1.0, -2.0, 0.25]).unwrap();
        let batch = model.classify(&x).unwrap();
        let single0 = model.score_row(x.row(0)).unwrap();
        let single1 = model.score_row(x.row(1)).unwrap();
        assert_eq!(batch, vec![single0, single1]);
    }

    #[test]
    fn score_gradient_matches_finite_difference() {
        let model = linear_classifier(vec![0.8, -0.4], 0.2);
        let x = [0.3, 0.9];
        let grad = model.score_gradient(&x).unwrap().unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            xp[i] += h;
            let mut xm = x;
            xm[i] -= h;
            let numeric =
                (model.score_row(&xp).unwrap() - model.score_row(&xm).unwrap()) / (2.0 * h);
            assert!((grad[i] - numeric).abs() < 1e-7);
        }
    }

    #[test]
    fn train_zero_epochs_is_noop_and_seeded_training_reproduces() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = ClassifierModel::glorot(schema(2), &[4], &mut rng).unwrap();
        let before = model.clone();
        let x = Matrix::from_vec(4, 2, vec![0.0, 0.0, 1.0, 1.0, 0.2, 0.1, 0.9, 0.8]).unwrap();
        let labels = [0u8, 1, 0, 1];
        let history =
            train_classifier(&mut model, &x, &labels, 0, 1, AdamConfig::default()).unwrap();
        assert!(history.is_empty());
        assert_eq!(model, before);

        let mut a = before.clone();
        let mut b = before.clone();
        let ha = train_classifier(&mut a, &x, &labels, 5, 42, AdamConfig::default()).unwrap();
        let hb = train_classifier(&mut b, &x, &labels, 5, 42, AdamConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
    }

    #[test]
    fn train_rejects_single_class() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = ClassifierModel::glorot(schema(2), &[], &mut rng).unwrap();
        let x = Matrix::zeros(3, 2);
        assert!(matches!(
            train_classifier(&mut model, &x, &[1, 1, 1], 1, 0, AdamConfig::default()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn separable_gaussians_reach_high_test_auc() {
        use crate::data::{
            generate_synthetic_dataset, CovarianceSpec, GaussianClassSpec, Split, SyntheticSpec,
            TabularSpec,
        };
        let spec = SyntheticSpec::Tabular(TabularSpec {
            feature_names: None,
            class0: GaussianClassSpec {
                size: 150,
                mean: vec![-1.25; 4],
                covariance: CovarianceSpec::Spherical(1.0),
            },
            class1: GaussianClassSpec {
                size: 150,
                mean: vec![1.25; 4],
                covariance: CovarianceSpec::Spherical(1.0),
            },
            categorical: vec![],
            train_fraction: 0.8,
        });
        let mut dataset = generate_synthetic_dataset(&spec, 17).unwrap();
        dataset.standardize().unwrap();
        let (train_x, train_y) = dataset.select(Split::Train);
        let (test_x, test_y) = dataset.select(Split::Test);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut model = ClassifierModel::glorot(dataset.schema.clone(), &[8], &mut rng).unwrap();
        train_classifier(
            &mut model,
            &train_x,
            &train_y,
            80,
            5,
            AdamConfig::with_learning_rate(0.03),
        )
        .unwrap();
        let scores = model.classify(&test_x).unwrap();
        let test_auc = auc(&scores, &test_y).unwrap();
        assert!(test_auc > 0.95, "test auc {test_auc}");
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5, 0.5, 0.5, 0.5], &[0, 1, 0, 1]).unwrap(), 0.5);
        let a = auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert!((a - 0.75).abs() < 1e-15);
        assert!(auc(&[0.1, 0.2], &[1, 1]).is_err());
    }

    #[test]
    fn auc_complement_and_monotone_invariance() {
        let scores = [0.11, 0.92, 0.4, 0.63, 0.05, 0.77];
        let labels = [0u8, 1, 0, 1, 0, 0];
        let flipped: Vec<u8> = labels.iter().map(|&l| 1 - l).collect();
        let a = auc(&scores, &labels).unwrap();
        let b = auc(&scores, &flipped).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);

        let transformed: Vec<f64> = scores.iter().map(|&s| (5.0 * s).exp()).collect();
        let c = auc(&transformed, &labels).unwrap();
        assert_eq!(a, c);
    }
}
