//! One-dimensional gradient descent on the interpolation coefficient.
//!
//! Useful when the score along the line is discontinuous or non-monotonic
//! (categorical softmax kinks) and a tight tolerance is hard to hit by
//! sampling. The descent minimizes the squared distance of the score to the
//! center of the acceptance band, with the gradient estimated by central
//! finite differences: the pipeline crosses a decoder, so no analytic path
//! is assumed.

use crate::error::Result;
use crate::methods::interp::latent_endpoints;
use crate::methods::ss_line::candidate_at;
use crate::methods::{
    CounterfactualGenerator, CounterfactualResult, ExplainContext, Method, SearchState,
    SharpShooterConfig,
};

const ALPHA_FLOOR: f64 = 1e-6;

pub struct AlphaGradientDescent {
    config: SharpShooterConfig,
}

impl AlphaGradientDescent {
    pub fn new(config: SharpShooterConfig) -> Result<Self> {
        config.validate()?;
        Ok(AlphaGradientDescent { config })
    }

    /// Midpoint of the acceptance region `(max(p, T - tol), T + tol]`.
    ///
    /// Aiming at the target itself stalls when the target sits exactly on the
    /// decision threshold: the loss minimum would be on the boundary the
    /// counterfactual must strictly cross.
    fn band_center(&self) -> f64 {
        let lo = self.config.p.max(self.config.target_score - self.config.tol);
        let hi = self.config.target_score + self.config.tol;
        0.5 * (lo + hi)
    }

    fn satisfied(&self, score: f64) -> bool {
        score > self.config.p && (score - self.config.target_score).abs() <= self.config.tol
    }
}

impl CounterfactualGenerator for AlphaGradientDescent {
    fn name(&self) -> &'static str {
        "ss-gd"
    }

    fn method(&self) -> Method {
        Method::SsGd
    }

    fn generate(&self, ctx: &ExplainContext, x_base: &[f64]) -> Result<CounterfactualResult> {
        let cfg = &self.config;
        let mut state = SearchState::new(self.method(), x_base, cfg.target_score);
        let endpoints = latent_endpoints(ctx, x_base)?;
        let center = self.band_center();

        // Midpoint start; symmetric and parameter-free.
        let mut alpha = 0.5;
        let mut candidate = candidate_at(ctx, &endpoints, alpha)?;
        if self.satisfied(candidate.score) {
            return Ok(state.accept(candidate));
        }
        state.offer_crossing(&candidate, cfg.p);

        let h = cfg.gd.fd_step;
        while state.iterations() < cfg.gd.max_iters {
            // Central difference of (center - f(alpha))^2, clamped into [0, 1].
            let a_plus = (alpha + h).min(1.0);
            let a_minus = (alpha - h).max(0.0);
            let loss = |s: f64| (center - s) * (center - s);
            let f_plus = match candidate_at(ctx, &endpoints, a_plus) {
                Ok(c) => c.score,
                Err(_) => break,
            };
            let f_minus = match candidate_at(ctx, &endpoints, a_minus) {
                Ok(c) => c.score,
                Err(_) => break,
            };
            let grad = (loss(f_plus) - loss(f_minus)) / (a_plus - a_minus);

            alpha = (alpha - cfg.gd.learning_rate * grad).clamp(ALPHA_FLOOR, 1.0);
            candidate = match candidate_at(ctx, &endpoints, alpha) {
                Ok(c) => c,
                Err(_) => break,
            };
            state.count_iteration();
            state.offer_crossing(&candidate, cfg.p);
            if self.satisfied(candidate.score) {
                return Ok(state.accept(candidate));
            }
        }
        Ok(state.finish())
    }
}
