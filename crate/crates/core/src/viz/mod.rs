//! Plot-ready visualization data: PCA projections of latent codes, weighted
//! hexbin grids of the decision boundary, interpolation traces, and
//! hyperparameter sweep records. The artifact emits CSVs; rendering is left
//! to external tooling.

pub mod hexbin;
pub mod pca;
pub mod sweep;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifier::Scorer;
use crate::error::{Error, Result};
use crate::methods::interp::{interpolate_codes, latent_endpoints};
use crate::methods::ExplainContext;
use crate::vae::VaeModel;

pub use hexbin::{HexCell, HexbinGrid};
pub use pca::{symmetric_eigen, PcaProjector};
pub use sweep::{derive_seed, pareto_front_flags, sweep_and_pareto, SweepConfig, SweepRecord};

/// Scores sampled along candidate interpolation lines, projected to 2-D.
///
/// For every `(z_base, z_target)` pair and every coefficient on the
/// `alpha_count`-point grid over `[0, 1]`, the interpolated code is decoded,
/// scored, and projected with `pca`. Exactly `pairs.len() * alpha_count`
/// points come back.
pub fn sample_boundary_cloud(
    classifier: &dyn Scorer,
    uvae: &VaeModel,
    pca: &PcaProjector,
    pairs: &[(Vec<f64>, Vec<f64>)],
    alpha_count: usize,
) -> Result<Vec<((f64, f64), f64)>> {
    if alpha_count < 2 {
        return Err(Error::contract("alpha count must be >= 2"));
    }
    let mut out = Vec::with_capacity(pairs.len() * alpha_count);
    for (z_base, z_target) in pairs {
        for i in 0..alpha_count {
            let alpha = i as f64 / (alpha_count - 1) as f64;
            let z = interpolate_codes(z_base, z_target, alpha);
            let decoded = uvae.decode_row(&z)?;
            let score = classifier.score(&decoded)?;
            let p = pca.project(&z);
            out.push(((p[0], p[1]), score));
        }
    }
    Ok(out)
}

/// One step of an interpolation trace: the raw decoded candidate and its
/// classifier score at a given coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub alpha: f64,
    pub sample: Vec<f64>,
    pub score: f64,
}

/// Decodes and scores candidates along one sample's interpolation line, in
/// ascending coefficient order. The grid must lie in `(0, 1]`.
pub fn trace_interpolation(
    ctx: &ExplainContext,
    x_base: &[f64],
    alpha_grid: &[f64],
) -> Result<Vec<TracePoint>> {
    if alpha_grid.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::contract("trace grid must lie in (0, 1]"));
    }
    let endpoints = latent_endpoints(ctx, x_base)?;
    let mut alphas = alpha_grid.to_vec();
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    alphas
        .into_iter()
        .map(|alpha| {
            let z = interpolate_codes(&endpoints.z_base, &endpoints.z_target, alpha);
            let sample = ctx.uvae.decode_row(&z)?;
            let score = ctx.classifier.score(&sample)?;
            Ok(TracePoint {
                alpha,
                sample,
                score,
            })
        })
        .collect()
}

/// Which population a projected latent code belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeClass {
    Base,
    Target,
    Projected,
    Counterfactual,
}

impl CodeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            CodeClass::Base => "base",
            CodeClass::Target => "target",
            CodeClass::Projected => "projected",
            CodeClass::Counterfactual => "counterfactual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub class: CodeClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

/// `q,r,center_x,center_y,count,mean_score`, cells in (q, r) order.
pub fn write_hexbin_csv<W: Write>(writer: W, grid: &HexbinGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["q", "r", "center_x", "center_y", "count", "mean_score"])?;
    for (&(q, r), cell) in &grid.cells {
        let (cx, cy) = grid.cell_center(q, r);
        w.write_record([
            q.to_string(),
            r.to_string(),
            cx.to_string(),
            cy.to_string(),
            cell.count.to_string(),
            cell.mean_score().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `x,y,class` scatter of projected codes.
pub fn write_scatter_csv<W: Write>(writer: W, points: &[ScatterPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "class"])?;
    for p in points {
        w.write_record([p.x.to_string(), p.y.to_string(), p.class.as_str().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `x0,y0,x1,y1` interpolation line segments.
pub fn write_segments_csv<W: Write>(writer: W, segments: &[LineSegment]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x0", "y0", "x1", "y1"])?;
    for s in segments {
        w.write_record([
            s.x0.to_string(),
            s.y0.to_string(),
            s.x1.to_string(),
            s.y1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `alpha,score,<feature...>` rows of one interpolation trace.
pub fn write_trace_csv<W: Write>(
    writer: W,
    feature_names: &[String],
    trace: &[TracePoint],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["alpha".to_string(), "score".to_string()];
    header.extend_from_slice(feature_names);
    w.write_record(&header)?;
    for t in trace {
        let mut record = vec![t.alpha.to_string(), t.score.to_string()];
        record.extend(t.sample.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// `beta,latent_dim,mse,kld,avg_proj_prob,on_front` sweep grid.
pub fn write_sweep_csv<W: Write>(writer: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "beta",
        "latent_dim",
        "mse",
        "kld",
        "avg_proj_prob",
        "on_front",
    ])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in records {
        w.write_record([
            r.beta.to_string(),
            r.latent_dim.to_string(),
            opt(r.reconstruction),
            opt(r.kl),
            opt(r.projected_base_probability),
            r.on_front.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::methods::ss_line::tests::scripted_context_models;
    use crate::nn::{Activation, DenseLayer, MlpNetwork};
    use crate::schema::FeatureSchema;
    use crate::vae::VaeRole;

    /// 2-D identity unified VAE: codes equal features.
    fn identity_uvae_2d() -> VaeModel {
        let mut enc_w = Matrix::zeros(4, 2);
        enc_w.set(0, 0, 1.0);
        enc_w.set(1, 1, 1.0);
        let encoder = MlpNetwork::new(vec![DenseLayer::from_parts(
            enc_w,
            vec![0.0; 4],
            Activation::Identity,
        )
        .unwrap()])
        .unwrap();
        let decoder = MlpNetwork::new(vec![DenseLayer::identity(2)]).unwrap();
        let schema = FeatureSchema::continuous_only(vec!["a".into(), "b".into()]);
        VaeModel::new(encoder, decoder, 1.0, 0.0, schema, VaeRole::Unified).unwrap()
    }

    #[test]
    fn boundary_cloud_counts_and_projects_endpoints() {
        let uvae = identity_uvae_2d();
        let score = |x: &[f64]| x[0].clamp(0.0, 1.0);
        let codes = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.4],
            vec![0.2, 0.8],
            vec![0.9, 0.1],
        ])
        .unwrap();
        let (pca, _) = PcaProjector::fit(&codes).unwrap();

        // One pair at alpha_count = 2: exactly the two projected endpoints.
        let pair = (vec![0.0, 0.0], vec![1.0, 0.4]);
        let cloud =
            sample_boundary_cloud(&score, &uvae, &pca, std::slice::from_ref(&pair), 2).unwrap();
        assert_eq!(cloud.len(), 2);
        let pb = pca.project(&pair.0);
        let pt = pca.project(&pair.1);
        assert_eq!(cloud[0].0, (pb[0], pb[1]));
        assert_eq!(cloud[1].0, (pt[0], pt[1]));

        // Point count is pairs x alpha_count.
        let pairs = vec![
            (vec![0.0, 0.0], vec![1.0, 0.4]),
            (vec![0.2, 0.8], vec![0.9, 0.1]),
            (vec![0.5, 0.5], vec![0.5, 0.5]),
        ];
        let cloud = sample_boundary_cloud(&score, &uvae, &pca, &pairs, 7).unwrap();
        assert_eq!(cloud.len(), 21);

        // Constant classifier: all scores equal.
        let constant = |_: &[f64]| 0.42;
        let cloud = sample_boundary_cloud(&constant, &uvae, &pca, &pairs, 3).unwrap();
        assert!(cloud.iter().all(|(_, s)| *s == 0.42));

        // alpha_count < 2 is rejected.
        assert!(sample_boundary_cloud(&score, &uvae, &pca, &pairs, 1).is_err());
    }

    #[test]
    fn trace_is_sorted_rejects_bad_grid_and_interpolates_identity() {
        let (tvae, uvae) = scripted_context_models();
        let score = |x: &[f64]| x[0].clamp(0.0, 1.0);
        let ctx = ExplainContext {
            classifier: &score,
            tvae: &tvae,
            uvae: &uvae,
        };
        assert!(trace_interpolation(&ctx, &[0.0], &[0.0, 0.5]).is_err());
        assert!(trace_interpolation(&ctx, &[0.0], &[1.5]).is_err());

        let trace = trace_interpolation(&ctx, &[0.0], &[0.9, 0.3, 0.6]).unwrap();
        let alphas: Vec<f64> = trace.iter().map(|t| t.alpha).collect();
        assert_eq!(alphas, vec![0.3, 0.6, 0.9]);
        // Identity autoencoder pipeline: decoded samples interpolate the
        // input and its projection linearly.
        for t in &trace {
            assert!((t.sample[0] - t.alpha).abs() < 1e-12);
        }
        // Deterministic across calls.
        assert_eq!(trace, trace_interpolation(&ctx, &[0.0], &[0.9, 0.3, 0.6]).unwrap());

        // Single-entry grid.
        let single = trace_interpolation(&ctx, &[0.0], &[0.5]).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn csv_writers_are_deterministic() {
        let grid = HexbinGrid::build(&[(0.0, 0.0, 0.25), (2.0, 1.0, 0.75)], 0.5).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_hexbin_csv(&mut a, &grid).unwrap();
        write_hexbin_csv(&mut b, &grid).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("q,r,center_x,center_y,count,mean_score\n"));

        let mut s = Vec::new();
        write_scatter_csv(
            &mut s,
            &[ScatterPoint {
                x: 1.5,
                y: -0.5,
                class: CodeClass::Projected,
            }],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(s).unwrap(),
            "x,y,class\n1.5,-0.5,projected\n"
        );
    }
}
