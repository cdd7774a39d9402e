use rayon::prelude::*;
use serde::Serialize;

use super::stats::{mean, variance};
use super::{Condition, ConditionReport, Method, Thresholds, Verdict};
use crate::error::Result;
use crate::law::SharedLaw;
use crate::linalg::{spectral_norm, LogScale, ScaledProduct};
use crate::report::ext_real;
use crate::rng::RngStream;

/// Draws per replication inspected by the heavy-tail heuristic.
const TAIL_PROBE: usize = 256;

/// `λ̂ = mean_r log‖M_1⋯M_T‖ / T` over `R` replications.
///
/// `stderr` combines the cross-replication standard error with a horizon
/// term `b = |λ̂(T) − λ̂(T/2)| / (√2 − 1)`, the remaining bias implied by the
/// halving difference if the bias decays like `T^{-1/2}`. Zero-drift
/// components of `log‖Π‖` do produce that rate, and at `T = 2000` it is an
/// order of magnitude above the sampling error.
#[derive(Clone, Debug, Serialize)]
pub struct LyapunovEstimate {
    #[serde(serialize_with = "ext_real")]
    pub lambda_hat: f64,
    #[serde(serialize_with = "ext_real")]
    pub stderr: f64,
    #[serde(serialize_with = "ext_real")]
    pub sampling_stderr: f64,
    #[serde(serialize_with = "ext_real")]
    pub horizon_bias: f64,
    /// `λ̂` computed at `T/2` on the same paths.
    #[serde(serialize_with = "ext_real")]
    pub lambda_half: f64,
    pub horizon: usize,
    pub replications: usize,
    pub caveats: Vec<String>,
    /// `log‖Π_1^T‖` per replication.
    #[serde(skip)]
    pub final_log_norms: Vec<f64>,
    /// `min_{T/2 ≤ t ≤ T} log‖Π_1^t‖` per replication.
    #[serde(skip)]
    pub tail_min_log_norms: Vec<f64>,
}

struct PathNorms {
    final_scale: LogScale,
    half_scale: LogScale,
    tail_min: f64,
    probe: Vec<f64>,
}

fn run_path(law: &SharedLaw, horizon: usize, seed: u64, stream: u64) -> Result<PathNorms> {
    let mut rng = RngStream::new(seed, stream);
    let mut p = ScaledProduct::identity(law.dim())?;
    let half = (horizon / 2).max(1);
    let mut half_scale = LogScale::ONE;
    let mut tail_min = f64::INFINITY;
    let mut probe = Vec::with_capacity(TAIL_PROBE.min(horizon));
    for t in 1..=horizon {
        let (m, _) = law.sample(&mut rng);
        if t <= TAIL_PROBE {
            probe.push(spectral_norm(&m).ln().max(0.0));
        }
        p.extend_in_place(&m)?;
        if t == half {
            half_scale = p.log_scale();
        }
        if t >= half {
            tail_min = tail_min.min(p.log_norm());
        }
    }
    Ok(PathNorms { final_scale: p.log_scale(), half_scale, tail_min, probe })
}

pub fn estimate_lyapunov(law: &SharedLaw, horizon: usize, replications: usize, seed: u64) -> Result<LyapunovEstimate> {
    if horizon == 0 || replications == 0 {
        return Err(crate::Error::InvalidInput("horizon and replications must be positive".into()));
    }
    let paths = (0..replications as u64)
        .into_par_iter()
        .map(|s| run_path(law, horizon, seed, s))
        .collect::<Result<Vec<_>>>()?;

    let half = (horizon / 2).max(1) as u64;
    let per_step: Vec<f64> = paths.iter().map(|p| p.final_scale.per_step(horizon as u64)).collect();
    let per_step_half: Vec<f64> = paths.iter().map(|p| p.half_scale.per_step(half)).collect();
    let mut caveats = Vec::new();
    if horizon < 100 {
        caveats.push(format!("horizon {horizon} is below the recommended minimum of 100"));
    }
    if replications < 2 {
        caveats.push("a single replication gives no sampling error estimate".to_string());
    }

    let (lambda_hat, lambda_half, sampling_stderr, horizon_bias) = if per_step.iter().all(|x| x.is_finite()) {
        let lam = mean(&per_step);
        let lam_half = mean(&per_step_half);
        let se = (variance(&per_step) / replications as f64).sqrt();
        let bias = if horizon >= 2 { (lam - lam_half).abs() / (std::f64::consts::SQRT_2 - 1.0) } else { 0.0 };
        (lam, lam_half, se, bias)
    } else {
        caveats.push("some products reached the zero matrix; log-norms are -inf on those paths".to_string());
        let all_zero = per_step.iter().all(|x| *x == f64::NEG_INFINITY);
        let se = if all_zero { 0.0 } else { f64::INFINITY };
        (f64::NEG_INFINITY, mean(&per_step_half), se, 0.0)
    };
    let stderr = (sampling_stderr * sampling_stderr + horizon_bias * horizon_bias).sqrt();

    // E log⁺‖M‖ heuristic on the positive draws: an exponential tail puts
    // about a third of the mass in the top decile, a heavy tail much more
    let mut probe: Vec<f64> = paths.iter().flat_map(|p| p.probe.iter().copied()).filter(|x| *x > 0.0).collect();
    probe.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = probe.iter().sum();
    if probe.len() >= 100 {
        let top: f64 = probe[..probe.len() / 10].iter().sum();
        if top / total > 0.5 {
            caveats.push(format!(
                "top decile of positive log+|M| draws carries {:.0}% of the mass; E log+|M| may be infinite",
                100.0 * top / total
            ));
        }
    }

    Ok(LyapunovEstimate {
        lambda_hat,
        stderr,
        sampling_stderr,
        horizon_bias,
        lambda_half,
        horizon,
        replications,
        caveats,
        final_log_norms: paths.iter().map(|p| p.final_scale.value()).collect(),
        tail_min_log_norms: paths.iter().map(|p| p.tail_min).collect(),
    })
}

/// C0 with default thresholds.
pub fn check_c0(law: &SharedLaw, horizon: usize, replications: usize, seed: u64) -> Result<ConditionReport> {
    Ok(check_c0_with(law, horizon, replications, seed, &Thresholds::default())?.1)
}

/// C0 from the sign of `λ̂ ± σ·stderr`; inside that band, from the share of
/// replications whose product has become negligible (HOLDS) or has stayed
/// at norm ≥ 1 through the whole second half of the horizon (FAILS).
pub fn check_c0_with(
    law: &SharedLaw,
    horizon: usize,
    replications: usize,
    seed: u64,
    th: &Thresholds,
) -> Result<(LyapunovEstimate, ConditionReport)> {
    let est = estimate_lyapunov(law, horizon, replications, seed)?;
    let r = est.replications as f64;
    let frac_small = est.final_log_norms.iter().filter(|x| **x < th.small_log).count() as f64 / r;
    let frac_stuck = est.tail_min_log_norms.iter().filter(|x| **x >= 0.0).count() as f64 / r;

    let all_zero = est.final_log_norms.iter().all(|x| *x == f64::NEG_INFINITY);
    let upper = est.lambda_hat + th.c0_sigma * est.stderr;
    let lower = est.lambda_hat - th.c0_sigma * est.stderr;
    let mut caveats = est.caveats.clone();
    let verdict = if all_zero || upper < 0.0 {
        Verdict::Holds
    } else if lower > 0.0 {
        Verdict::Fails
    } else {
        caveats.push("Lyapunov sign test undecided; verdict from the per-replication norm heuristic".to_string());
        if frac_small >= th.quorum {
            Verdict::Holds
        } else if frac_stuck >= th.quorum {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        }
    };
    let mut report = ConditionReport::new(Condition::C0, verdict, Method::MonteCarlo)
        .stat("lambda_hat", est.lambda_hat)
        .stat("stderr", est.stderr)
        .stat("sampling_stderr", est.sampling_stderr)
        .stat("horizon_bias", est.horizon_bias)
        .stat("frac_negligible", frac_small)
        .stat("frac_norm_at_least_one", frac_stuck)
        .stat("horizon", est.horizon as f64)
        .stat("replications", r);
    report.caveats = caveats;
    Ok((est, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{law_constant, law_frame_diagonal, FrameDiagonal, ScalarLaw, VectorLaw};
    use crate::linalg::{SquareMatrix, Vector};

    fn constant(diag: &[f64]) -> SharedLaw {
        law_constant(SquareMatrix::diag(diag).unwrap(), Vector::zeros(diag.len()).unwrap()).unwrap()
    }

    #[test]
    fn constant_dyadic_law_is_exact() {
        let est = estimate_lyapunov(&constant(&[0.5, 0.25]), 200, 4, 0).unwrap();
        assert_eq!(est.lambda_hat, 0.5f64.ln());
        assert_eq!(est.stderr, 0.0);
        let est = estimate_lyapunov(&constant(&[1.0, 1.0, 1.0]), 150, 3, 0).unwrap();
        assert_eq!(est.lambda_hat, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn c0_verdicts_for_fixed_laws() {
        let th = Thresholds::default();
        let (_, r) = check_c0_with(&constant(&[0.5, 0.25]), 200, 4, 0, &th).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        // ‖Π‖ = 1 forever: the sign test is undecided, the stuck-norm rule decides
        let (_, r) = check_c0_with(&constant(&[0.5, 1.0]), 200, 4, 0, &th).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        let (_, r) = check_c0_with(&constant(&[2.0]), 200, 4, 0, &th).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        let (_, r) = check_c0_with(&constant(&[0.0, 0.0]), 200, 4, 0, &th).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn coupled_half_law_contracts() {
        let law = law_frame_diagonal(
            FrameDiagonal::standard_frame(2).unwrap(),
            ScalarLaw::Coupled { tuples: vec![vec![1.0, 0.5], vec![0.5, 1.0]], weights: vec![0.5, 0.5] },
            VectorLaw::zero(2).unwrap(),
        )
        .unwrap();
        let est = estimate_lyapunov(&law, 2000, 64, 1).unwrap();
        let target = -0.5 * std::f64::consts::LN_2;
        assert!((est.lambda_hat - target).abs() <= 3.0 * est.stderr, "{est:?}");
        assert!(est.horizon_bias > est.sampling_stderr);
        let report = check_c0(&law, 2000, 64, 1).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
    }
}
