//! Beta-VAE: encoder to a diagonal Gaussian code, decoder back to feature
//! space, ELBO loss with a KL weight, and a seeded training loop.
//!
//! The same type serves two roles: the *target* VAE is trained only on
//! target-class rows and acts as a projector onto the target class, while the
//! *unified* VAE is trained on both classes and provides the shared latent
//! space for interpolation and the realism metrics.
//!
//! Inference is deterministic everywhere downstream: codes are taken at the
//! posterior mean (`eps = 0`), so encode -> decode is a pure function.

use rand::Rng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{AdamConfig, AdamState, Activation, LossSpec, MlpNetwork};
use crate::schema::FeatureSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VaeRole {
    /// Trained only on target-class rows; projects inputs to the target class.
    Target,
    /// Trained on both classes; defines the shared latent space.
    Unified,
}

/// ELBO components for one batch: `total = reconstruction + beta * kl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaeLossBreakdown {
    pub reconstruction: f64,
    pub kl: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct VaeModel {
    encoder: MlpNetwork,
    decoder: MlpNetwork,
    latent_dim: usize,
    beta: f64,
    categorical_weight: f64,
    schema: FeatureSchema,
    role: VaeRole,
}

/// Training hyperparameters for [`train_vae`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct VaeTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: AdamConfig,
}

impl VaeModel {
    pub fn new(
        encoder: MlpNetwork,
        decoder: MlpNetwork,
        beta: f64,
        categorical_weight: f64,
        schema: FeatureSchema,
        role: VaeRole,
    ) -> Result<Self> {
        schema.validate()?;
        let latent_dim = decoder.input_dim();
        if encoder.output_dim() != 2 * latent_dim {
            return Err(Error::shape(format!(
                "encoder must emit 2 x latent dim ({}) values, got {}",
                latent_dim,
                encoder.output_dim()
            )));
        }
        if encoder.input_dim() != schema.input_dim() || decoder.output_dim() != schema.input_dim()
        {
            return Err(Error::shape(format!(
                "encoder in {} / decoder out {} must both match schema dim {}",
                encoder.input_dim(),
                decoder.output_dim(),
                schema.input_dim()
            )));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::contract("beta must be >= 0"));
        }
        if !(0.0..=1.0).contains(&categorical_weight) {
            return Err(Error::contract("categorical weight must be in [0, 1]"));
        }
        Ok(VaeModel {
            encoder,
            decoder,
            latent_dim,
            beta,
            categorical_weight,
            schema,
            role,
        })
    }

    /// Fresh Glorot-initialized VAE with tanh hidden layers: the encoder maps
    /// the schema width through `hidden` to `2 * latent_dim`, the decoder
    /// mirrors it back and ends in the schema's output activation.
    pub fn glorot<R: Rng + ?Sized>(
        schema: FeatureSchema,
        hidden: &[usize],
        latent_dim: usize,
        beta: f64,
        categorical_weight: f64,
        role: VaeRole,
        rng: &mut R,
    ) -> Result<Self> {
        if latent_dim == 0 {
            return Err(Error::contract("latent dim must be positive"));
        }
        let input = schema.input_dim();
        let mut enc_dims = vec![input];
        enc_dims.extend_from_slice(hidden);
        enc_dims.push(2 * latent_dim);
        let mut enc_acts = vec![Activation::Tanh; hidden.len()];
        enc_acts.push(Activation::Identity);
        let encoder = MlpNetwork::glorot(&enc_dims, enc_acts, rng)?;

        let mut dec_dims = vec![latent_dim];
        dec_dims.extend(hidden.iter().rev());
        dec_dims.push(input);
        let mut dec_acts = vec![Activation::Tanh; hidden.len()];
        dec_acts.push(schema.decoder_activation());
        let decoder = MlpNetwork::glorot(&dec_dims, dec_acts, rng)?;

        VaeModel::new(encoder, decoder, beta, categorical_weight, schema, role)
    }

    pub fn encoder(&self) -> &MlpNetwork {
        &self.encoder
    }

    pub fn decoder(&self) -> &MlpNetwork {
        &self.decoder
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn categorical_weight(&self) -> f64 {
        self.categorical_weight
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn role(&self) -> VaeRole {
        self.role
    }

    /// Posterior parameters `(mu, logvar)`, each `n x latent_dim`.
    pub fn encode(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        let out = self.encoder.forward(x)?;
        let mu = out.column_block(0, self.latent_dim)?;
        let logvar = out.column_block(self.latent_dim, self.latent_dim)?;
        Ok((mu, logvar))
    }

    /// Mean code of a single row.
    pub fn encode_mean_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (mu, _) = self.encode(&Matrix::from_row(x)?)?;
        Ok(mu.row(0).to_vec())
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        self.decoder.forward(z)
    }

    pub fn decode_row(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.decode(&Matrix::from_row(z)?)?.row(0).to_vec())
    }

    /// Mean-code reconstruction: `decode(encode(x).mu)`.
    pub fn reconstruct_mean(&self, x: &Matrix) -> Result<Matrix> {
        let (mu, _) = self.encode(x)?;
        self.decode(&mu)
    }

    /// Reconstruction term of the ELBO for this schema: plain MSE for pixels,
    /// otherwise the convex continuous/categorical mix.
    pub fn reconstruction_loss_spec(&self) -> LossSpec {
        if self.schema.pixel_mode || self.schema.categorical.is_empty() {
            LossSpec::MeanSquaredError
        } else {
            LossSpec::MixedReconstruction {
                continuous: self.schema.continuous_count(),
                groups: self.schema.group_blocks(),
                categorical_weight: self.categorical_weight,
            }
        }
    }

    /// ELBO pieces for explicit reconstructions and posterior parameters.
    ///
    /// Fails if `xhat` categorical blocks are not normalized.
    pub fn elbo_loss(
        &self,
        x: &Matrix,
        xhat: &Matrix,
        mu: &Matrix,
        logvar: &Matrix,
    ) -> Result<VaeLossBreakdown> {
        if x.cols() != self.schema.input_dim() || xhat.cols() != self.schema.input_dim() {
            return Err(Error::shape("elbo inputs do not match schema".to_string()));
        }
        for r in 0..xhat.rows() {
            self.schema.check_simplex_blocks(xhat.row(r), 1e-6)?;
        }
        let reconstruction = self.reconstruction_loss_spec().evaluate(xhat, x)?;
        let kl = kl_diag_gaussian(mu, logvar)?;
        Ok(VaeLossBreakdown {
            reconstruction,
            kl,
            total: reconstruction + self.beta * kl,
        })
    }

    /// Deterministic (`eps = 0`) ELBO of a batch under this model.
    pub fn deterministic_elbo(&self, x: &Matrix) -> Result<VaeLossBreakdown> {
        let (mu, logvar) = self.encode(x)?;
        let xhat = self.decode(&mu)?;
        self.elbo_loss(x, &xhat, &mu, &logvar)
    }
}

/// `z = mu + exp(logvar / 2) .* eps`, elementwise.
pub fn reparameterize(mu: &Matrix, logvar: &Matrix, eps: &Matrix) -> Result<Matrix> {
    let sigma_eps = logvar.zip_map(eps, |lv, e| (lv / 2.0).exp() * e)?;
    mu.zip_map(&sigma_eps, |m, se| m + se)
}

/// `KL(N(mu, diag sigma^2) || N(0, I))`, averaged over rows:
/// per sample `-0.5 * sum_j (1 + logvar_j - mu_j^2 - exp(logvar_j))`.
pub fn kl_diag_gaussian(mu: &Matrix, logvar: &Matrix) -> Result<f64> {
    if mu.rows() != logvar.rows() || mu.cols() != logvar.cols() {
        return Err(Error::shape("mu and logvar shapes differ".to_string()));
    }
    LossSpec::KlDiagGaussian.evaluate(&mu.hcat(logvar)?, &Matrix::zeros(0, 0))
}

/// One full ELBO forward/backward pass with a fixed noise draw.
///
/// Returns the loss pieces plus parameter gradients for the encoder and
/// decoder, with the reparameterization chain rule applied. Shared by the
/// training loop and the gradient-check tests.
pub fn elbo_with_grads(
    model: &VaeModel,
    x: &Matrix,
    eps: &Matrix,
) -> Result<(VaeLossBreakdown, crate::nn::NetGradients, crate::nn::NetGradients)> {
    let latent = model.latent_dim;
    let enc_trace = model.encoder.forward_traced(x)?;
    let enc_out = enc_trace.output();
    let mu = enc_out.column_block(0, latent)?;
    let logvar = enc_out.column_block(latent, latent)?;
    let z = reparameterize(&mu, &logvar, eps)?;
    let dec_trace = model.decoder.forward_traced(&z)?;
    let xhat = dec_trace.output();

    let recon_spec = model.reconstruction_loss_spec();
    let reconstruction = recon_spec.evaluate(xhat, x)?;
    let kl = kl_diag_gaussian(&mu, &logvar)?;
    let breakdown = VaeLossBreakdown {
        reconstruction,
        kl,
        total: reconstruction + model.beta * kl,
    };

    // Reconstruction gradient back through the decoder into z.
    let d_xhat = recon_spec.gradient(xhat, x)?;
    let (dec_grads, d_z) = model.decoder.backward(&dec_trace, &d_xhat);

    // Chain rule through z = mu + exp(logvar/2) * eps.
    let d_mu_recon = d_z.clone();
    let d_lv_recon = d_z
        .zip_map(eps, |g, e| g * e)?
        .zip_map(&logvar, |ge, lv| ge * 0.5 * (lv / 2.0).exp())?;

    // KL gradient lands directly on (mu, logvar), scaled by beta.
    let kl_grad = LossSpec::KlDiagGaussian.gradient(&mu.hcat(&logvar)?, &Matrix::zeros(0, 0))?;
    let d_mu_kl = kl_grad.column_block(0, latent)?;
    let d_lv_kl = kl_grad.column_block(latent, latent)?;

    let beta = model.beta;
    let d_mu = d_mu_recon.zip_map(&d_mu_kl, |r, k| r + beta * k)?;
    let d_lv = d_lv_recon.zip_map(&d_lv_kl, |r, k| r + beta * k)?;
    let d_enc_out = d_mu.hcat(&d_lv)?;
    let (enc_grads, _) = model.encoder.backward(&enc_trace, &d_enc_out);

    Ok((breakdown, enc_grads, dec_grads))
}

/// Trains the VAE in place with seeded shuffling and Adam, returning the
/// per-epoch deterministic ELBO on the full training set.
///
/// Callers must pass only target-class rows when the model role is
/// [`VaeRole::Target`].
pub fn train_vae(
    model: &mut VaeModel,
    data: &Matrix,
    cfg: &VaeTrainConfig,
) -> Result<Vec<VaeLossBreakdown>> {
    if data.rows() == 0 {
        return Err(Error::contract("training dataset is empty"));
    }
    if data.cols() != model.schema.input_dim() {
        return Err(Error::shape(format!(
            "dataset width {} does not match schema dim {}",
            data.cols(),
            model.schema.input_dim()
        )));
    }
    if cfg.batch_size == 0 {
        return Err(Error::contract("batch size must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shapes: Vec<usize> = model
        .encoder
        .param_shapes()
        .into_iter()
        .chain(model.decoder.param_shapes())
        .collect();
    let mut adam = AdamState::new(cfg.optimizer, &shapes);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..data.rows()).collect();
        order.shuffle(&mut rng);

        for batch_idx in order.chunks(cfg.batch_size) {
            let batch_rows: Vec<Vec<f64>> =
                batch_idx.iter().map(|&i| data.row(i).to_vec()).collect();
            let xb = Matrix::from_rows(&batch_rows)?;
            let eps_data: Vec<f64> = (0..xb.rows() * model.latent_dim)
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let eps = Matrix::from_vec(xb.rows(), model.latent_dim, eps_data)?;

            let (breakdown, enc_grads, dec_grads) = match elbo_with_grads(model, &xb, &eps) {
                Ok(v) => v,
                // Overflowing activations mean the optimizer blew up; report
                // the epoch rather than the layer.
                Err(Error::Numeric { .. }) => return Err(Error::Diverged { epoch }),
                Err(e) => return Err(e),
            };
            if !breakdown.total.is_finite() {
                return Err(Error::Diverged { epoch });
            }

            let grad_blocks: Vec<&[f64]> = enc_grads
                .blocks()
                .into_iter()
                .chain(dec_grads.blocks())
                .collect();
            let mut param_blocks = model.encoder.param_blocks_mut();
            param_blocks.extend(model.decoder.param_blocks_mut());
            adam.apply(&mut param_blocks, &grad_blocks)?;
        }

        let epoch_loss = match model.deterministic_elbo(data) {
            Ok(v) => v,
            Err(Error::Numeric { .. }) => return Err(Error::Diverged { epoch }),
            Err(e) => return Err(e),
        };
        if !epoch_loss.total.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(epoch_loss);
    }

    Ok(history)
}
