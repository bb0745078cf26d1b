//! Property tests for the crate-wide numeric invariants.

use proptest::prelude::*;

use sharpshooter::methods::interpolate_codes;
use sharpshooter::nn::{Activation, AdamConfig, AdamState, Block, MlpNetwork};
use sharpshooter::schema::{onehot_decode, onehot_encode};
use sharpshooter::vae::kl_diag_gaussian;
use sharpshooter::viz::{pareto_front_flags, HexbinGrid};
use sharpshooter::{auc, Matrix};

fn finite_vec(len: usize, range: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-range..range, len)
}

proptest! {
    #[test]
    fn kl_is_non_negative_and_zero_only_at_prior(
        mu in finite_vec(4, 5.0),
        logvar in finite_vec(4, 4.0),
    ) {
        let m = Matrix::from_vec(1, 4, mu.clone()).unwrap();
        let lv = Matrix::from_vec(1, 4, logvar.clone()).unwrap();
        let kl = kl_diag_gaussian(&m, &lv).unwrap();
        prop_assert!(kl >= -1e-9, "kl {kl}");
        let at_prior = mu.iter().all(|&v| v == 0.0) && logvar.iter().all(|&v| v == 0.0);
        if at_prior {
            prop_assert_eq!(kl, 0.0);
        } else {
            // Strictly positive away from the prior (the summand is strictly
            // convex with its minimum at mu = 0, logvar = 0).
            prop_assert!(kl > 0.0, "kl {kl} at mu {:?} lv {:?}", mu, logvar);
        }
    }

    #[test]
    fn interpolation_identities(
        z_base in finite_vec(6, 10.0),
        z_target in finite_vec(6, 10.0),
        alpha in 0.0f64..=1.0,
    ) {
        // Exact endpoints.
        prop_assert_eq!(interpolate_codes(&z_base, &z_target, 0.0), z_base.clone());
        prop_assert_eq!(interpolate_codes(&z_base, &z_target, 1.0), z_target.clone());
        // Degenerate line is constant.
        prop_assert_eq!(interpolate_codes(&z_base, &z_base, alpha), z_base.clone());
        // Interior points stay inside the per-coordinate envelope.
        let z = interpolate_codes(&z_base, &z_target, alpha);
        for ((&b, &t), &v) in z_base.iter().zip(&z_target).zip(&z) {
            let (lo, hi) = if b <= t { (b, t) } else { (t, b) };
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn auc_complement_and_monotone_invariance(
        scores in prop::collection::vec(0.0f64..1.0, 8..24),
        labels in prop::collection::vec(0u8..2, 8..24),
    ) {
        let n = scores.len().min(labels.len());
        let scores = &scores[..n];
        let labels = &labels[..n];
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        // Deduplicate scores to make the run tie-free.
        let mut seen = scores.to_vec();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assume!(seen.windows(2).all(|w| w[0] != w[1]));

        let flipped: Vec<u8> = labels.iter().map(|&l| 1 - l).collect();
        let a = auc(scores, labels).unwrap();
        let b = auc(scores, &flipped).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);

        let transformed: Vec<f64> = scores.iter().map(|&s| (3.0 * s).exp() + 1.0).collect();
        prop_assert_eq!(a, auc(&transformed, labels).unwrap());
    }

    #[test]
    fn softmax_grouped_rows_sum_to_one(
        seed in 0u64..1000,
        input in finite_vec(3, 3.0),
    ) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let act = Activation::SoftmaxGrouped {
            groups: vec![Block::new(0, 2), Block::new(2, 3)],
        };
        let net = MlpNetwork::glorot(&[3, 5], vec![act], &mut rng).unwrap();
        let x = Matrix::from_vec(1, 3, input).unwrap();
        let y = net.forward(&x).unwrap();
        let row = y.row(0);
        prop_assert!((row[0] + row[1] - 1.0).abs() < 1e-9);
        prop_assert!((row[2] + row[3] + row[4] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn adam_zero_gradient_is_fixed_point(
        params in finite_vec(5, 100.0),
        steps in 1usize..10,
    ) {
        let mut state = AdamState::new(AdamConfig::default(), &[5]);
        let mut p = params.clone();
        for _ in 0..steps {
            state.apply(&mut [&mut p], &[&[0.0; 5]]).unwrap();
        }
        prop_assert_eq!(p, params);
    }

    #[test]
    fn hexbin_conserves_counts(
        points in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0, 0.0f64..1.0), 1..120),
        cell_size in 0.1f64..5.0,
    ) {
        let grid = HexbinGrid::build(&points, cell_size).unwrap();
        prop_assert_eq!(grid.total_count(), points.len());
        for cell in grid.cells.values() {
            let mean = cell.mean_score();
            prop_assert!((0.0..=1.0).contains(&mean));
        }
    }

    #[test]
    fn pareto_flags_match_quadratic_oracle(
        raw in prop::collection::vec((0u8..6, 0u8..6), 1..40),
    ) {
        let points: Vec<(f64, f64)> =
            raw.iter().map(|&(a, b)| (f64::from(a), f64::from(b))).collect();
        let fast = pareto_front_flags(&points);
        // Quadratic oracle with first-occurrence dedup.
        for (i, &(x, y)) in points.iter().enumerate() {
            let dominated = points.iter().enumerate().any(|(j, &(ox, oy))| {
                j != i && ox <= x && oy <= y && (ox < x || oy < y)
            });
            let dup = points[..i].contains(&(x, y));
            prop_assert_eq!(fast[i], !dominated && !dup, "index {} of {:?}", i, points);
        }
    }

    #[test]
    fn onehot_roundtrip_all_indices(card in 2usize..12, pick in 0usize..12) {
        let idx = pick % card;
        let v = onehot_encode(idx, card).unwrap();
        prop_assert_eq!(v.len(), card);
        prop_assert_eq!(onehot_decode(&v), idx);
    }
}
