use proptest::prelude::*;

use perpetua::diagnostics::test_distributional_identity;
use perpetua::law::{law_constant, law_frame_diagonal, FrameDiagonal, ScalarLaw, VectorLaw};
use perpetua::linalg::{suffix_min_norm, SuffixNormTracker};
use perpetua::simulate::{run_trajectory_observed, DrawRecorder, RunConfig};
use perpetua::{spectral_norm, RngStream, ScaledProduct, SquareMatrix, Vector};

fn matrix(d: usize) -> impl Strategy<Value = SquareMatrix> {
    prop::collection::vec(-2.0f64..2.0, d * d).prop_map(move |v| SquareMatrix::new(d, v).unwrap())
}

fn history(d: usize, max_len: usize) -> impl Strategy<Value = Vec<SquareMatrix>> {
    prop::collection::vec(matrix(d), 1..=max_len)
}

fn vector(d: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-2.0f64..2.0, d).prop_map(|v| Vector::new(v).unwrap())
}

fn dim_and<T: std::fmt::Debug>(f: impl Fn(usize) -> BoxedStrategy<T>) -> impl Strategy<Value = (usize, T)> {
    (1usize..=4).prop_flat_map(move |d| (Just(d), f(d)))
}

fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = b.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() <= tol * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spectral_norm_is_submultiplicative((_, (a, b)) in dim_and(|d| (matrix(d), matrix(d)).boxed())) {
        let lhs = spectral_norm(&a.mul(&b).unwrap());
        let rhs = spectral_norm(&a) * spectral_norm(&b);
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-300);
    }

    #[test]
    fn scaled_product_materialises_to_the_dense_product((d, hist) in dim_and(|d| history(d, 12).boxed())) {
        let mut scaled = ScaledProduct::identity(d).unwrap();
        let mut dense = SquareMatrix::identity(d).unwrap();
        for m in &hist {
            scaled.extend_in_place(m).unwrap();
            dense = dense.mul(m).unwrap();
        }
        prop_assert!(rel_close(&scaled.materialize(), dense.as_slice(), 1e-9));
        if !scaled.is_zero() {
            let direct = spectral_norm(&dense).ln();
            prop_assert!((scaled.log_norm() - direct).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn suffix_minimum_matches_fresh_suffix_products((d, hist) in dim_and(|d| history(d, 10).boxed())) {
        let fresh = (0..hist.len())
            .map(|k| {
                let mut p = ScaledProduct::identity(d).unwrap();
                for m in &hist[k..] {
                    p.extend_in_place(m).unwrap();
                }
                p.log_norm()
            })
            .fold(f64::INFINITY, f64::min);
        let mut tracker = SuffixNormTracker::new(d).unwrap();
        for m in &hist {
            tracker.push(m).unwrap();
        }
        prop_assert_eq!(tracker.min_log_norm(), fresh);
        prop_assert_eq!(suffix_min_norm(&hist).unwrap(), fresh);
    }

    #[test]
    fn appending_the_identity_adds_a_unit_candidate((d, hist) in dim_and(|d| history(d, 10).boxed())) {
        let before = suffix_min_norm(&hist).unwrap();
        let mut longer = hist.clone();
        longer.push(SquareMatrix::identity(d).unwrap());
        let after = suffix_min_norm(&longer).unwrap();
        let want = before.min(0.0);
        prop_assert!(after == want || (after - want).abs() <= 1e-12 * want.abs().max(1.0), "{after} vs {want}");
    }

    #[test]
    fn frame_diagonal_draws_have_the_frame_as_eigenvectors(
        theta in 0.0f64..std::f64::consts::TAU,
        tuples in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..4),
        seed in any::<u64>(),
    ) {
        let (c, s) = (theta.cos(), theta.sin());
        let frame = vec![Vector::new(vec![c, s]).unwrap(), Vector::new(vec![-s, c]).unwrap()];
        let n = tuples.len();
        let mut weights = vec![1.0 / n as f64; n];
        weights[n - 1] = 1.0 - (n - 1) as f64 / n as f64;
        let scalars = ScalarLaw::Coupled { tuples: tuples.clone(), weights };
        let law = law_frame_diagonal(frame.clone(), scalars, VectorLaw::zero(2).unwrap()).unwrap();
        let mut rng = RngStream::new(seed, 0);
        for _ in 0..8 {
            let (m, _) = law.sample(&mut rng);
            let found = tuples.iter().any(|a| {
                frame.iter().zip(a).all(|(v, ai)| {
                    let mv = m.mul_vec(v).unwrap();
                    let r: f64 = mv.as_slice().iter().zip(v.as_slice()).map(|(x, y)| (x - ai * y).powi(2)).sum();
                    r.sqrt() < 1e-9
                })
            });
            prop_assert!(found);
        }
    }

    #[test]
    fn recursion_equals_the_time_reversed_sum(
        (d, (draws, z0)) in dim_and(|d| {
            (prop::collection::vec((matrix(d), vector(d)), 1..=12), vector(d)).boxed()
        })
    ) {
        // X_t = M_t X_{t-1} + Z_t on (M_1..M_t)
        let mut x = z0.clone();
        for (m, z) in &draws {
            x = Vector::new(m.mul_vec(&x).unwrap().as_slice().iter().zip(z.as_slice()).map(|(a, b)| a + b).collect())
                .unwrap();
        }
        // Σ_i M'_1⋯M'_{i-1} Z'_i + M'_1⋯M'_t Z_0 with M'_j = M_{t+1-j}
        let reversed: Vec<_> = draws.iter().rev().collect();
        let mut prefix = SquareMatrix::identity(d).unwrap();
        let mut sum = vec![0.0; d];
        // rounding is relative to the size of the terms, not of their sum
        let mut magnitude = 0.0;
        let mut add = |sum: &mut Vec<f64>, term: Vector| {
            magnitude += term.norm();
            sum.iter_mut().zip(term.as_slice()).for_each(|(s, t)| *s += t);
        };
        for (m, z) in &reversed {
            add(&mut sum, prefix.mul_vec(z).unwrap());
            prefix = prefix.mul(m).unwrap();
        }
        add(&mut sum, prefix.mul_vec(&z0).unwrap());
        let err = x.as_slice().iter().zip(&sum).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-9 * magnitude.max(1.0), "{err} vs {magnitude}");
    }

    #[test]
    fn deterministic_laws_have_zero_identity_statistic(
        (d, (m, z, z0)) in dim_and(|d| (matrix(d), vector(d), vector(d)).boxed()),
        seed in any::<u64>(),
    ) {
        let law = law_constant(m.scaled(0.5).unwrap(), z).unwrap();
        let r = test_distributional_identity(&law, &VectorLaw::constant(z0), 6, 12, seed, 20).unwrap();
        prop_assert_eq!(r.statistic, 0.0);
        prop_assert_eq!(d, law.dim());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w_term_is_the_prefix_product_applied_to_the_new_innovation(seed in any::<u64>(), d in 1usize..=4) {
        let tuples = vec![vec![0.5; d], vec![1.5; d]];
        let law = law_frame_diagonal(
            FrameDiagonal::standard_frame(d).unwrap(),
            ScalarLaw::Coupled { tuples, weights: vec![0.5, 0.5] },
            VectorLaw::gaussian(Vector::zeros(d).unwrap(), 1.0).unwrap(),
        )
        .unwrap();
        let cfg = RunConfig::new(law, VectorLaw::zero(d).unwrap(), 30, 1, seed).unwrap();
        let mut rec = DrawRecorder::default();
        let path = run_trajectory_observed(&cfg, 0, &mut rec).unwrap();
        let mut prefix = ScaledProduct::identity(d).unwrap();
        for (r, (m, z)) in path.iter().zip(&rec.draws) {
            prop_assert_eq!(r.w_term_log, prefix.apply(z).unwrap().log_norm());
            prefix.extend_in_place(m).unwrap();
        }
    }
}
