//! Target-class projection and latent line interpolation.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::methods::ExplainContext;
use crate::vae::{VaeModel, VaeRole};

/// Projects a base sample onto the target class by passing it through the
/// target VAE at the posterior mean: `decode(encode(x).mu)`.
///
/// The decoder's output activation keeps categorical blocks normalized, so
/// the projection is schema-valid.
pub fn project_to_target(tvae: &VaeModel, x_base: &[f64]) -> Result<Vec<f64>> {
    if tvae.role() != VaeRole::Target {
        return Err(Error::contract(
            "projection requires a target-role VAE",
        ));
    }
    let x = Matrix::from_row(x_base)?;
    let projected = tvae.reconstruct_mean(&x)?;
    Ok(projected.row(0).to_vec())
}

/// Exact convex combination `z = (1 - alpha) * z_base + alpha * z_target`.
///
/// `alpha = 0` and `alpha = 1` return the endpoints bitwise.
pub fn interpolate_codes(z_base: &[f64], z_target: &[f64], alpha: f64) -> Vec<f64> {
    assert_eq!(z_base.len(), z_target.len(), "code lengths differ");
    assert!((0.0..=1.0).contains(&alpha), "alpha {alpha} outside [0, 1]");
    if alpha == 0.0 {
        return z_base.to_vec();
    }
    if alpha == 1.0 {
        return z_target.to_vec();
    }
    z_base
        .iter()
        .zip(z_target)
        .map(|(&b, &t)| {
            // Degenerate coordinates stay put exactly; the weighted sum could
            // drift by an ulp.
            if b == t {
                b
            } else {
                (1.0 - alpha) * b + alpha * t
            }
        })
        .collect()
}

/// Both ends of the interpolation line in unified-VAE space.
#[derive(Debug, Clone)]
pub struct LatentEndpoints {
    pub z_base: Vec<f64>,
    pub z_target: Vec<f64>,
    /// The target-class projection in feature space.
    pub x_projected: Vec<f64>,
}

/// Projects the base sample and embeds both endpoints with the unified
/// VAE's mean encoder.
pub fn latent_endpoints(ctx: &ExplainContext, x_base: &[f64]) -> Result<LatentEndpoints> {
    let x_projected = project_to_target(ctx.tvae, x_base)?;
    let z_base = ctx.uvae.encode_mean_row(x_base)?;
    let z_target = ctx.uvae.encode_mean_row(&x_projected)?;
    Ok(LatentEndpoints {
        z_base,
        z_target,
        x_projected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::nn::{Activation, DenseLayer, MlpNetwork};
    use crate::schema::FeatureSchema;

    pub(crate) fn identity_vae(dim: usize, role: VaeRole) -> VaeModel {
        let mut enc_w = Matrix::zeros(2 * dim, dim);
        for i in 0..dim {
            enc_w.set(i, i, 1.0);
        }
        let encoder = MlpNetwork::new(vec![DenseLayer::from_parts(
            enc_w,
            vec![0.0; 2 * dim],
            Activation::Identity,
        )
        .unwrap()])
        .unwrap();
        let decoder = MlpNetwork::new(vec![DenseLayer::identity(dim)]).unwrap();
        let schema =
            FeatureSchema::continuous_only((0..dim).map(|i| format!("f{i}")).collect());
        VaeModel::new(encoder, decoder, 1.0, 0.0, schema, role).unwrap()
    }

    #[test]
    fn identity_tvae_projects_to_itself() {
        let tvae = identity_vae(3, VaeRole::Target);
        let x = [0.5, -1.0, 2.0];
        let projected = project_to_target(&tvae, &x).unwrap();
        assert_eq!(projected, x.to_vec());
        // Deterministic across calls.
        assert_eq!(project_to_target(&tvae, &x).unwrap(), projected);
    }

    #[test]
    fn projection_requires_target_role() {
        let uvae = identity_vae(2, VaeRole::Unified);
        assert!(project_to_target(&uvae, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn interpolation_endpoints_are_bitwise() {
        let zb = [0.1, -0.7, 3.3];
        let zt = [2.0, 4.0, -1.5];
        assert_eq!(interpolate_codes(&zb, &zt, 0.0), zb.to_vec());
        assert_eq!(interpolate_codes(&zb, &zt, 1.0), zt.to_vec());
    }

    #[test]
    fn interpolation_closed_form() {
        let z = interpolate_codes(&[0.0, 0.0], &[2.0, 4.0], 0.25);
        assert_eq!(z, vec![0.5, 1.0]);
    }

    #[test]
    fn degenerate_line_is_constant() {
        let z = [1.0, -2.0];
        for alpha in [0.0, 0.3, 0.77, 1.0] {
            assert_eq!(interpolate_codes(&z, &z, alpha), z.to_vec());
        }
    }
}
