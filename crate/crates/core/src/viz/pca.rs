//! Two-component PCA via Jacobi eigendecomposition of the sample covariance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Eigenvalues (descending) and matching unit eigenvectors of a symmetric
/// matrix, computed with cyclic Jacobi rotations.
#[allow(clippy::needless_range_loop)]
pub fn symmetric_eigen(input: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = input.len();
    if input.iter().any(|row| row.len() != n) {
        return Err(Error::shape("eigen input must be square".to_string()));
    }
    let mut a: Vec<Vec<f64>> = input.to_vec();
    for i in 0..n {
        for j in 0..n {
            if (a[i][j] - a[j][i]).abs() > 1e-9 {
                return Err(Error::contract("eigen input must be symmetric"));
            }
        }
    }
    // V starts as identity and accumulates rotations; columns are vectors.
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let off = |a: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..a.len() {
            for j in 0..a.len() {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s
    };

    for _sweep in 0..100 {
        if off(&a) < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-30 {
                    continue;
                }
                // Rotation angle that zeroes a[p][q].
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| {
            let mut vec: Vec<f64> = v.iter().map(|row| row[col]).collect();
            fix_sign(&mut vec);
            vec
        })
        .collect();
    Ok((eigenvalues, eigenvectors))
}

/// Deterministic sign convention: the entry with the largest magnitude is
/// made positive.
fn fix_sign(v: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Centered projection onto the top two principal axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PcaProjector {
    pub mean: Vec<f64>,
    pub axes: [Vec<f64>; 2],
    pub explained_variance: [f64; 2],
}

impl PcaProjector {
    /// Fits on at least three points of dimension two or more. Degenerate
    /// clouds (all points identical) are rejected.
    #[allow(clippy::needless_range_loop)]
    pub fn fit(points: &Matrix) -> Result<(PcaProjector, Vec<[f64; 2]>)> {
        let (n, d) = (points.rows(), points.cols());
        if n < 3 {
            return Err(Error::contract("pca needs at least 3 points"));
        }
        if d < 2 {
            return Err(Error::contract("pca needs dimension >= 2"));
        }
        let mut mean = vec![0.0; d];
        for r in 0..n {
            for (m, &x) in mean.iter_mut().zip(points.row(r)) {
                *m += x;
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }

        let mut cov = vec![vec![0.0; d]; d];
        for r in 0..n {
            let row = points.row(r);
            for i in 0..d {
                let di = row[i] - mean[i];
                for j in i..d {
                    cov[i][j] += di * (row[j] - mean[j]);
                }
            }
        }
        let denom = (n - 1) as f64;
        for i in 0..d {
            for j in i..d {
                cov[i][j] /= denom;
                cov[j][i] = cov[i][j];
            }
        }

        let total_variance: f64 = (0..d).map(|i| cov[i][i]).sum();
        if total_variance < 1e-24 {
            return Err(Error::contract(
                "pca input is degenerate: all points identical",
            ));
        }

        let (values, vectors) = symmetric_eigen(&cov)?;
        let projector = PcaProjector {
            mean,
            axes: [vectors[0].clone(), vectors[1].clone()],
            explained_variance: [values[0], values[1]],
        };
        let projections = (0..n).map(|r| projector.project(points.row(r))).collect();
        Ok((projector, projections))
    }

    pub fn project(&self, point: &[f64]) -> [f64; 2] {
        let dot = |axis: &[f64]| {
            point
                .iter()
                .zip(&self.mean)
                .zip(axis)
                .map(|((&x, &m), &a)| (x - m) * a)
                .sum::<f64>()
        };
        [dot(&self.axes[0]), dot(&self.axes[1])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn axis_aligned_cloud_recovers_standard_basis() {
        // x spread 10, y spread 1, zero cross-covariance: axes are +-e_x, +-e_y.
        let pts = Matrix::from_rows(&[
            vec![-10.0, 1.0],
            vec![10.0, 1.0],
            vec![-10.0, -1.0],
            vec![10.0, -1.0],
            vec![0.0, 0.0],
        ])
        .unwrap();
        let (p, _) = PcaProjector::fit(&pts).unwrap();
        assert!(p.axes[0][0].abs() > 1.0 - 1e-6);
        assert!(p.axes[0][1].abs() < 1e-6);
        assert!(p.axes[1][1].abs() > 1.0 - 1e-6);
        assert!(p.explained_variance[0] >= p.explained_variance[1]);
    }

    #[test]
    fn mean_point_projects_to_origin() {
        let pts = Matrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 1.0, -1.0],
            vec![3.0, 3.0, 1.0],
            vec![2.0, 2.0, 1.0],
        ])
        .unwrap();
        let (p, _) = PcaProjector::fit(&pts).unwrap();
        let proj = p.project(&p.mean.clone());
        assert!(proj[0].abs() < 1e-12 && proj[1].abs() < 1e-12);
    }

    #[test]
    fn degenerate_cloud_is_rejected() {
        let pts = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(PcaProjector::fit(&pts).is_err());
    }

    #[test]
    fn axes_are_orthonormal_and_satisfy_eigen_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..5).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect())
            .collect();
        let pts = Matrix::from_rows(&rows).unwrap();
        let (p, projections) = PcaProjector::fit(&pts).unwrap();

        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&p.axes[0], &p.axes[0]) - 1.0).abs() < 1e-9);
        assert!((dot(&p.axes[1], &p.axes[1]) - 1.0).abs() < 1e-9);
        assert!(dot(&p.axes[0], &p.axes[1]).abs() < 1e-9);

        // Projection variance along axis 0 equals the top eigenvalue.
        let n = projections.len() as f64;
        let mean0: f64 = projections.iter().map(|p| p[0]).sum::<f64>() / n;
        let var0: f64 =
            projections.iter().map(|p| (p[0] - mean0).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var0 - p.explained_variance[0]).abs() < 1e-9);
    }

    #[test]
    fn translation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..4).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let shifted: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|v| v + 100.0).collect())
            .collect();
        let (_, proj_a) = PcaProjector::fit(&Matrix::from_rows(&rows).unwrap()).unwrap();
        let (_, proj_b) = PcaProjector::fit(&Matrix::from_rows(&shifted).unwrap()).unwrap();
        for (a, b) in proj_a.iter().zip(&proj_b) {
            assert!((a[0] - b[0]).abs() < 1e-9);
            assert!((a[1] - b[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_power_iteration_oracle_up_to_sign() {
        // Independent route: power iteration with deflation on the covariance.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let t: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                vec![
                    2.0 * t + 0.1 * rng.gen::<f64>(),
                    -t + 0.1 * rng.gen::<f64>(),
                    0.5 * t + 0.1 * rng.gen::<f64>(),
                    rng.gen::<f64>() * 0.1,
                    rng.gen::<f64>() * 0.1,
                ]
            })
            .collect();
        let pts = Matrix::from_rows(&rows).unwrap();
        let (p, _) = PcaProjector::fit(&pts).unwrap();

        let d = 5;
        let n = pts.rows() as f64;
        let mut mean = vec![0.0; d];
        for r in 0..pts.rows() {
            for (m, &x) in mean.iter_mut().zip(pts.row(r)) {
                *m += x / n;
            }
        }
        let mut cov = vec![vec![0.0; d]; d];
        for r in 0..pts.rows() {
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] +=
                        (pts.get(r, i) - mean[i]) * (pts.get(r, j) - mean[j]) / (n - 1.0);
                }
            }
        }
        for (k, axis) in p.axes.iter().enumerate() {
            let mut v = vec![1.0 / (d as f64).sqrt(); d];
            for _ in 0..20_000 {
                let mut w = vec![0.0; d];
                for i in 0..d {
                    for j in 0..d {
                        w[i] += cov[i][j] * v[j];
                    }
                }
                // Deflate previously found directions.
                for prev in &p.axes[..k] {
                    let dot: f64 = w.iter().zip(prev).map(|(a, b)| a * b).sum();
                    for (wi, pi) in w.iter_mut().zip(prev) {
                        *wi -= dot * pi;
                    }
                }
                let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                for (vi, wi) in v.iter_mut().zip(&w) {
                    *vi = wi / norm;
                }
            }
            let dot: f64 = v.iter().zip(axis).map(|(a, b)| a * b).sum();
            assert!(dot.abs() > 1.0 - 1e-6, "axis {k}: |dot| = {}", dot.abs());
        }
    }
}
