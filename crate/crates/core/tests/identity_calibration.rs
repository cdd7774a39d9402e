mod support;

use perpetua::diagnostics::test_distributional_identity;
use perpetua::law::{law_constant, VectorLaw};
use perpetua::{SquareMatrix, Vector};
use support::calibration_laws;

/// Law `k` uses seeds `100k..100k + 100`, so the trials are independent
/// across laws as well as within them.
#[test]
fn identity_rejections_stay_near_the_nominal_level() {
    for (k, (name, law, z0)) in calibration_laws().into_iter().enumerate() {
        let base = 100 * k as u64;
        let rejections = (base..base + 100)
            .filter(|seed| test_distributional_identity(&law, &z0, 10, 100, *seed, 200).unwrap().p_value <= 0.05)
            .count();
        assert!(rejections <= 10, "{name}: {rejections} of 100 rejected");
    }
}

#[test]
fn deterministic_identity_is_exact() {
    let law = law_constant(SquareMatrix::diag(&[0.5, 3.0]).unwrap(), Vector::new(vec![1.0, -2.0]).unwrap()).unwrap();
    let z0 = VectorLaw::constant(Vector::new(vec![2.0, 1.0]).unwrap());
    let r = test_distributional_identity(&law, &z0, 12, 50, 0, 100).unwrap();
    assert_eq!(r.statistic, 0.0);
}

#[test]
#[ignore = "slow: ten thousand samples per side"]
fn large_sample_identity() {
    for (name, law, z0) in calibration_laws() {
        let r = test_distributional_identity(&law, &z0, 10, 10_000, 1, 20).unwrap();
        assert!(r.p_value > 0.01, "{name}: p = {}", r.p_value);
    }
}
