//! Gradient descent in input space: `min_x (T - f(x))^2`.
//!
//! Continuous features move freely. One-hot blocks receive gradient like any
//! other coordinate and are re-projected onto the simplex (clip to `>= 0`,
//! renormalize) after each step; the final output is argmax-decoded. Pixels
//! are clipped into `[0, 1]` only at termination.

use crate::classifier::Scorer;
use crate::error::Result;
use crate::methods::{
    report_view, Candidate, CounterfactualGenerator, CounterfactualResult, ExplainContext,
    GdConfig, GradientMode, Method, SearchState,
};
use crate::schema::FeatureSchema;

pub struct InputGradientDescent {
    config: GdConfig,
}

impl InputGradientDescent {
    pub fn new(config: GdConfig) -> Result<Self> {
        config.validate()?;
        Ok(InputGradientDescent { config })
    }

    pub fn config(&self) -> &GdConfig {
        &self.config
    }
}

pub(crate) fn satisfied(cfg: &GdConfig, score: f64) -> bool {
    score > cfg.p && (score - cfg.target_score).abs() < cfg.tol
}

/// `d score / d x`, analytic when the scorer provides it, otherwise (or when
/// configured) central differences.
pub(crate) fn score_input_gradient(
    scorer: &dyn Scorer,
    x: &[f64],
    mode: GradientMode,
    fd_step: f64,
) -> Result<Vec<f64>> {
    if mode == GradientMode::AnalyticBackprop {
        if let Some(g) = scorer.score_gradient(x)? {
            return Ok(g);
        }
    }
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let original = probe[i];
        probe[i] = original + fd_step;
        let plus = scorer.score(&probe)?;
        probe[i] = original - fd_step;
        let minus = scorer.score(&probe)?;
        probe[i] = original;
        grad[i] = (plus - minus) / (2.0 * fd_step);
    }
    Ok(grad)
}

/// Clips each one-hot block to non-negative values and renormalizes it to
/// sum one; a block pushed entirely to zero falls back to uniform.
pub(crate) fn project_simplex_blocks(schema: &FeatureSchema, x: &mut [f64]) {
    for i in 0..schema.categorical.len() {
        let block = schema.group_block(i);
        let vals = &mut x[block.range()];
        let mut sum = 0.0;
        for v in vals.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
            sum += *v;
        }
        if sum <= 1e-12 {
            let u = 1.0 / vals.len() as f64;
            for v in vals.iter_mut() {
                *v = u;
            }
        } else {
            for v in vals.iter_mut() {
                *v /= sum;
            }
        }
    }
}

impl CounterfactualGenerator for InputGradientDescent {
    fn name(&self) -> &'static str {
        "gdi"
    }

    fn method(&self) -> Method {
        Method::Gdi
    }

    fn generate(&self, ctx: &ExplainContext, x_base: &[f64]) -> Result<CounterfactualResult> {
        let cfg = &self.config;
        let schema = ctx.schema();
        let mut state = SearchState::new(self.method(), x_base, cfg.target_score);

        let mut x = x_base.to_vec();
        let mut score = ctx.classifier.score(&x)?;
        // The base sample is schema-valid by contract, so the start needs no
        // report view.
        if satisfied(cfg, score) {
            return Ok(state.accept(Candidate {
                x,
                score,
                alpha: None,
            }));
        }

        while state.iterations() < cfg.max_iters {
            let grad = match score_input_gradient(
                ctx.classifier,
                &x,
                cfg.gradient_mode,
                cfg.fd_step,
            ) {
                Ok(g) => g,
                Err(_) => break,
            };
            // d/dx (T - f)^2 = -2 (T - f) * df/dx.
            let coeff = -2.0 * (cfg.target_score - score);
            for (xi, gi) in x.iter_mut().zip(&grad) {
                *xi -= cfg.learning_rate * coeff * gi;
            }
            project_simplex_blocks(schema, &mut x);

            score = match ctx.classifier.score(&x) {
                Ok(s) => s,
                Err(_) => break,
            };
            state.count_iteration();

            // Status decisions happen on the reportable artifact.
            let candidate = match report_view(schema, &x) {
                None => Candidate {
                    x: x.clone(),
                    score,
                    alpha: None,
                },
                Some(view) => {
                    let view_score = match ctx.classifier.score(&view) {
                        Ok(s) => s,
                        Err(_) => break,
                    };
                    Candidate {
                        x: view,
                        score: view_score,
                        alpha: None,
                    }
                }
            };
            state.offer_crossing(&candidate, cfg.p);
            if satisfied(cfg, candidate.score) {
                return Ok(state.accept(candidate));
            }
        }
        Ok(state.finish())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::methods::ss_line::tests::scripted_context_models;
    use crate::methods::Status;

    pub(crate) fn run_gdi(
        cfg: GdConfig,
        score: impl Fn(&[f64]) -> f64 + Sync,
        x_base: &[f64],
    ) -> CounterfactualResult {
        let (tvae, uvae) = scripted_context_models();
        let ctx = ExplainContext {
            classifier: &score,
            tvae: &tvae,
            uvae: &uvae,
        };
        InputGradientDescent::new(cfg)
            .unwrap()
            .generate(&ctx, x_base)
            .unwrap()
    }

    fn sigmoid(z: f64) -> f64 {
        1.0 / (1.0 + (-z).exp())
    }

    #[test]
    fn satisfied_start_is_returned_unchanged() {
        let cfg = GdConfig {
            p: 0.25,
            ..GdConfig::default()
        };
        let r = run_gdi(cfg, |x: &[f64]| sigmoid(x[0]), &[0.01]);
        assert_eq!(r.status, Status::ValidWithinTol);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.x_cf, Some(vec![0.01]));
    }

    #[test]
    fn one_dimensional_sigmoid_converges_near_zero() {
        // f = sigmoid(x) from x0 = -2 toward T = 0.5; the crossing sits at
        // x = 0. p below the band keeps the stop rule on the tolerance alone.
        let cfg = GdConfig {
            learning_rate: 0.5,
            max_iters: 5000,
            tol: 0.02,
            target_score: 0.5,
            p: 0.25,
            gradient_mode: GradientMode::FiniteDifference,
            fd_step: 1e-6,
        };
        let r = run_gdi(cfg, |x: &[f64]| sigmoid(x[0]), &[-2.0]);
        assert_eq!(r.status, Status::ValidWithinTol);
        let x = r.x_cf.unwrap()[0];
        assert!(x.abs() < 0.1, "x {x}");
        assert!((r.score.unwrap() - 0.5).abs() < 0.02);
    }

    #[test]
    fn zero_iteration_budget_fails() {
        let cfg = GdConfig {
            max_iters: 0,
            ..GdConfig::default()
        };
        let r = run_gdi(cfg, |_: &[f64]| 0.2, &[0.0]);
        assert_eq!(r.status, Status::Failed);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn objective_is_non_increasing_for_small_steps() {
        // 1-D descent oracle on the toy sigmoid: with a stable step size the
        // objective (T - f)^2 never increases along the trajectory.
        let t = 0.5;
        let mut x = -2.0;
        let eta = 0.5;
        let mut prev = (t - sigmoid(x)).powi(2);
        for _ in 0..200 {
            let f = sigmoid(x);
            let grad = -2.0 * (t - f) * f * (1.0 - f);
            x -= eta * grad;
            let obj = (t - sigmoid(x)).powi(2);
            assert!(obj <= prev + 1e-12, "objective rose: {prev} -> {obj}");
            prev = obj;
        }
    }

    #[test]
    fn pixel_outputs_are_clamped_at_termination() {
        use crate::matrix::Matrix;
        use crate::nn::{Activation, DenseLayer, MlpNetwork};
        use crate::schema::FeatureSchema;
        use crate::vae::{VaeModel, VaeRole};

        // 4-pixel schema; a large step size pushes iterates far outside
        // [0, 1], but the reported counterfactual must be clamped back.
        let schema = FeatureSchema::pixels(2);
        let mut enc_w = Matrix::zeros(8, 4);
        for i in 0..4 {
            enc_w.set(i, i, 1.0);
        }
        let encoder = MlpNetwork::new(vec![DenseLayer::from_parts(
            enc_w,
            vec![0.0; 8],
            Activation::Identity,
        )
        .unwrap()])
        .unwrap();
        let decoder = MlpNetwork::new(vec![DenseLayer::identity(4)]).unwrap();
        let uvae =
            VaeModel::new(encoder.clone(), decoder.clone(), 1.0, 0.0, schema.clone(), VaeRole::Unified)
                .unwrap();
        let tvae = VaeModel::new(encoder, decoder, 1.0, 0.0, schema, VaeRole::Target).unwrap();

        let score = |x: &[f64]| sigmoid(x.iter().sum::<f64>());
        let ctx = ExplainContext {
            classifier: &score,
            tvae: &tvae,
            uvae: &uvae,
        };
        let cfg = GdConfig {
            learning_rate: 50.0,
            max_iters: 200,
            tol: 0.02,
            target_score: 0.5,
            p: 0.25,
            gradient_mode: GradientMode::FiniteDifference,
            fd_step: 1e-6,
        };
        let r = InputGradientDescent::new(cfg)
            .unwrap()
            .generate(&ctx, &[0.0, 0.0, 0.0, 0.0])
            .unwrap();
        if let Some(x_cf) = r.x_cf {
            assert!(
                x_cf.iter().all(|&v| (0.0..=1.0).contains(&v)),
                "unclamped pixels: {x_cf:?}"
            );
        }
    }

    #[test]
    fn untouched_onehot_blocks_require_zero_gradient() {
        use crate::schema::{CategoricalGroup, FeatureSchema};
        let schema = FeatureSchema {
            continuous: vec!["a".into()],
            categorical: vec![CategoricalGroup {
                name: "g".into(),
                cardinality: 2,
            }],
            pixel_mode: false,
        };
        // Scorer ignores the categorical block entirely.
        let blind = |x: &[f64]| sigmoid(x[0]);
        // Scorer that leans on the block.
        let sighted = |x: &[f64]| sigmoid(x[0] + 2.0 * x[1] - 2.0 * x[2]);

        let cfg = GdConfig {
            learning_rate: 0.5,
            max_iters: 300,
            tol: 0.02,
            target_score: 0.5,
            p: 0.25,
            gradient_mode: GradientMode::FiniteDifference,
            fd_step: 1e-6,
        };
        let x_base = [-2.0, 0.0, 1.0];

        let run = |score: &dyn Scorer| {
            let mut x = x_base.to_vec();
            for _ in 0..50 {
                let g = score_input_gradient(score, &x, GradientMode::FiniteDifference, 1e-6)
                    .unwrap();
                let f = score.score(&x).unwrap();
                let coeff = -2.0 * (cfg.target_score - f);
                for (xi, gi) in x.iter_mut().zip(&g) {
                    *xi -= cfg.learning_rate * coeff * gi;
                }
                project_simplex_blocks(&schema, &mut x);
            }
            x
        };

        let x_blind = run(&blind);
        assert_eq!(&x_blind[1..], &[0.0, 1.0], "zero gradient leaves block");
        let x_sighted = run(&sighted);
        assert_ne!(&x_sighted[1..], &[0.0, 1.0], "gradient moves block");
    }
}
