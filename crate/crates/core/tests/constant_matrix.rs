mod support;

use perpetua::diagnostics::estimate_lyapunov;
use perpetua::law::law_constant;
use perpetua::spectral::{c0_exact, eigenvalues, power_via_spectral, spectral_components, spectral_radius};
use perpetua::{spectral_norm, RngStream, SquareMatrix, Vector};
use support::{fixtures, log_norm_power, random_matrix, rel_err};

#[test]
fn reconstruction_matches_direct_powers() {
    let mut rng = RngStream::new(2024, 0);
    let mut cases: Vec<SquareMatrix> = (0..100).map(|i| random_matrix(&mut rng, 1 + i % 6)).collect();
    cases.extend(fixtures());
    for m in &cases {
        let dec = spectral_components(m).unwrap();
        assert!(dec.identity_residual < 1e-8 && dec.first_power_residual < 1e-8, "{m:?}");
        assert!(dec.polynomial.degree() <= m.dim());
        for t in 0..=20u64 {
            let (p, im) = dec.power(t).unwrap();
            let direct = m.pow(t as u32).unwrap();
            assert!(rel_err(&p, &direct) <= 1e-7, "t={t} {m:?}");
            assert!(im < 1e-8 * (1.0 + p.frobenius_norm()));
        }
    }
}

#[test]
fn jordan_cases_use_the_derivative_terms() {
    let j = &fixtures()[6];
    let dec = spectral_components(j).unwrap();
    assert_eq!(dec.multiplicities, vec![3]);
    for t in [0u64, 1, 2, 5, 20, 50] {
        assert!(rel_err(&power_via_spectral(&dec, t).unwrap(), &j.pow(t as u32).unwrap()) <= 1e-8);
    }
}

/// C0 ⇔ `|λ₁| < 1`, checked against the decay of `Mᵗ`. Where `|λ₁| < 1` but
/// `‖M²⁰⁰‖` is still above 1e-6, the horizon is doubled until it is not.
#[test]
fn c0_matches_power_decay() {
    let mut rng = RngStream::new(7, 1);
    let mut cases: Vec<SquareMatrix> = (0..200).map(|i| random_matrix(&mut rng, 1 + i % 6)).collect();
    cases.extend(fixtures());
    let mut extended = 0;
    for m in &cases {
        let c0 = c0_exact(m);
        let direct = m.pow(200).unwrap();
        let n200 = spectral_norm(&direct);
        if c0.holds {
            let mut t = 200u64;
            let mut log_norm = n200.ln();
            while log_norm >= 1e-6f64.ln() {
                t *= 2;
                assert!(t < 1 << 40, "no decay for {m:?}");
                log_norm = log_norm_power(m, t);
            }
            extended += usize::from(t > 200);
        } else {
            assert!(n200 >= 1.0, "{m:?}: ‖M^200‖ = {n200}");
        }
    }
    assert!(extended < cases.len() / 4);
}

#[test]
fn power_norm_dominates_the_spectral_radius() {
    let mut rng = RngStream::new(11, 0);
    for i in 0..60 {
        let m = random_matrix(&mut rng, 1 + i % 5);
        let rho = spectral_radius(&m);
        let mut p = SquareMatrix::identity(m.dim()).unwrap();
        for t in 1..=30 {
            p = p.mul(&m).unwrap();
            assert!(spectral_norm(&p) >= rho.powi(t) * (1.0 - 1e-9));
        }
    }
}

#[test]
fn exact_and_estimated_lyapunov_signs_agree() {
    let mut rng = RngStream::new(5, 0);
    let mut checked = 0;
    for i in 0..40 {
        let m = random_matrix(&mut rng, 1 + i % 4);
        let log_rho = spectral_radius(&m).ln();
        if log_rho.abs() < 0.05 {
            continue;
        }
        let d = m.dim();
        let law = law_constant(m, Vector::zeros(d).unwrap()).unwrap();
        let est = estimate_lyapunov(&law, 2000, 2, 0).unwrap();
        assert!((est.lambda_hat - log_rho).abs() <= 3.0 * est.stderr + 1e-3, "{} vs {log_rho}", est.lambda_hat);
        assert_eq!(est.lambda_hat < 0.0, log_rho < 0.0);
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn eigenvalues_are_sorted_by_modulus() {
    let mut rng = RngStream::new(3, 3);
    for _ in 0..50 {
        let ev = eigenvalues(&random_matrix(&mut rng, 5));
        assert!(ev.windows(2).all(|w| w[0].norm() >= w[1].norm()));
    }
}
