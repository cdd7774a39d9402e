use rayon::prelude::*;
use serde::Serialize;

use super::stats::{mean, variance};
use super::{Condition, ConditionReport, Method, Thresholds, Verdict};
use crate::error::{Error, Result};
use crate::law::SharedLaw;
use crate::linalg::spectral_norm;
use crate::report::ext_real;
use crate::rng::RngStream;

const CHUNK: usize = 1024;
const KNOTS: usize = 1000;

/// Monte Carlo moments of `log‖M_1‖`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentSummary {
    pub n_samples: usize,
    /// Fraction of draws with `M_1 = 0`, where `log‖M_1‖ = -inf`.
    pub zero_mass: f64,
    #[serde(serialize_with = "ext_real")]
    pub mean_log_norm: f64,
    #[serde(serialize_with = "ext_real")]
    pub stderr_log_norm: f64,
    #[serde(serialize_with = "ext_real")]
    pub mean_abs_log_norm: f64,
    #[serde(serialize_with = "ext_real")]
    pub mean_log_plus: f64,
    #[serde(serialize_with = "ext_real")]
    pub mean_log_minus: f64,
    /// `E[log⁺‖M‖ / A_M(log⁺‖M‖)]`, with `0/0` read as 0.
    #[serde(serialize_with = "ext_real")]
    pub mean_truncated_ratio: f64,
}

fn log_norms(law: &SharedLaw, n: usize, seed: u64) -> Vec<f64> {
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = RngStream::new(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| spectral_norm(&law.sample(&mut rng).0).ln()).collect()
        })
        .collect();
    parts.concat()
}

/// `A_M(y) = ∫_0^y P(−log‖M‖ > x) dx` from the empirical survival function,
/// trapezoid rule on `KNOTS` equal steps of `[0, y_max]`, linear in between.
struct TruncatedMean {
    step: f64,
    cumulative: Vec<f64>,
}

impl TruncatedMean {
    fn new(neg_logs_sorted: &[f64], y_max: f64) -> Self {
        let n = neg_logs_sorted.len() as f64;
        let survival = |x: f64| {
            // count of values strictly above x
            let idx = neg_logs_sorted.partition_point(|v| *v <= x);
            (neg_logs_sorted.len() - idx) as f64 / n
        };
        let step = y_max / KNOTS as f64;
        let mut cumulative = vec![0.0; KNOTS + 1];
        let mut prev = survival(0.0);
        for k in 1..=KNOTS {
            let s = survival(k as f64 * step);
            cumulative[k] = cumulative[k - 1] + 0.5 * step * (prev + s);
            prev = s;
        }
        Self { step, cumulative }
    }

    fn at(&self, y: f64) -> f64 {
        if self.step == 0.0 {
            return 0.0;
        }
        let pos = (y / self.step).min(KNOTS as f64);
        let k = pos.floor() as usize;
        if k >= KNOTS {
            return self.cumulative[KNOTS];
        }
        let frac = pos - k as f64;
        self.cumulative[k] + frac * (self.cumulative[k + 1] - self.cumulative[k])
    }
}

pub fn moment_summary(law: &SharedLaw, n_samples: usize, seed: u64) -> Result<MomentSummary> {
    if n_samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let logs = log_norms(law, n_samples, seed);
    let n = logs.len() as f64;
    let zero_mass = logs.iter().filter(|l| **l == f64::NEG_INFINITY).count() as f64 / n;
    let plus: Vec<f64> = logs.iter().map(|l| l.max(0.0)).collect();
    let minus: Vec<f64> = logs.iter().map(|l| (-l).max(0.0)).collect();
    let (mean_log_norm, stderr_log_norm, mean_abs_log_norm) = if zero_mass > 0.0 {
        (f64::NEG_INFINITY, f64::NAN, f64::INFINITY)
    } else {
        let abs: Vec<f64> = logs.iter().map(|l| l.abs()).collect();
        (mean(&logs), (variance(&logs) / n).sqrt(), mean(&abs))
    };

    let mut neg_sorted: Vec<f64> = logs.iter().map(|l| -l).collect();
    neg_sorted.sort_by(f64::total_cmp);
    let y_max = plus.iter().copied().fold(0.0, f64::max);
    let a_m = TruncatedMean::new(&neg_sorted, y_max);
    let ratios: Vec<f64> = plus
        .iter()
        .map(|y| {
            if *y == 0.0 {
                0.0
            } else {
                let a = a_m.at(*y);
                if a > 0.0 {
                    y / a
                } else {
                    f64::INFINITY
                }
            }
        })
        .collect();

    Ok(MomentSummary {
        n_samples,
        zero_mass,
        mean_log_norm,
        stderr_log_norm,
        mean_abs_log_norm,
        mean_log_plus: mean(&plus),
        mean_log_minus: mean(&minus),
        mean_truncated_ratio: mean(&ratios),
    })
}

/// Reports for the two moment conditions:
///
/// * R36i: `E|log‖M‖| < ∞` and `E log‖M‖ < 0`;
/// * R36ii: `E log⁻‖M‖ = ∞` and `E[log⁺‖M‖ / A_M(log⁺‖M‖)] < ∞`.
pub fn check_moment_conditions(
    law: &SharedLaw,
    n_samples: usize,
    seed: u64,
    th: &Thresholds,
) -> Result<(ConditionReport, ConditionReport)> {
    let s = moment_summary(law, n_samples, seed)?;
    let logs_minus_sorted = {
        let mut m: Vec<f64> = log_norms(law, n_samples, seed).iter().map(|l| (-l).max(0.0)).collect();
        m.sort_by(|a, b| b.total_cmp(a));
        m
    };
    let zero_caveat = format!(
        "M = 0 with empirical probability {}; log|M| is -inf there and that mass is excluded from the finite moments",
        s.zero_mass
    );

    let mut r1 = ConditionReport::new(Condition::R36i, Verdict::Inconclusive, Method::MonteCarlo);
    r1.verdict = if s.zero_mass > 0.0 {
        r1.caveats.push(zero_caveat.clone());
        Verdict::Fails
    } else {
        let upper = s.mean_log_norm + th.c0_sigma * s.stderr_log_norm;
        let lower = s.mean_log_norm - th.c0_sigma * s.stderr_log_norm;
        if upper < 0.0 {
            Verdict::Holds
        } else if lower > 0.0 || (s.stderr_log_norm == 0.0 && s.mean_log_norm >= 0.0) {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        }
    };
    r1 = r1
        .stat("mean_log_norm", s.mean_log_norm)
        .stat("stderr_log_norm", s.stderr_log_norm)
        .stat("mean_abs_log_norm", s.mean_abs_log_norm)
        .stat("zero_mass", s.zero_mass)
        .stat("n_samples", s.n_samples as f64)
        .caveat("finiteness of E|log|M|| is assumed from the sample, not tested");

    let mut r2 = ConditionReport::new(Condition::R36ii, Verdict::Inconclusive, Method::MonteCarlo);
    let total_minus: f64 = logs_minus_sorted.iter().sum();
    let top = logs_minus_sorted.len().div_ceil(100);
    let top_share = if total_minus > 0.0 {
        logs_minus_sorted[..top].iter().sum::<f64>() / total_minus
    } else {
        0.0
    };
    r2.verdict = if s.zero_mass > 0.0 {
        // E log⁻ = ∞, and A_M(y) ≥ P(M = 0)·y bounds the ratio by 1 / P(M = 0)
        r2.caveats.push(zero_caveat);
        Verdict::Holds
    } else if total_minus == 0.0 || top_share < 0.5 {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    r2 = r2
        .stat("mean_log_minus", s.mean_log_minus)
        .stat("mean_log_plus", s.mean_log_plus)
        .stat("mean_truncated_ratio", s.mean_truncated_ratio)
        .stat("top_percentile_share_log_minus", top_share)
        .stat("zero_mass", s.zero_mass)
        .stat("n_samples", s.n_samples as f64)
        .caveat("E log-|M| = inf is judged from tail dominance of the sample; a light-looking tail counts as finite")
        .caveat(format!("A_M by trapezoid quadrature with {KNOTS} steps on the empirical survival function"));
    Ok((r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{law_constant, law_frame_diagonal, law_gaussian_entries, FrameDiagonal, ScalarLaw, VectorLaw};
    use crate::linalg::{SquareMatrix, Vector};

    fn constant(diag: &[f64]) -> SharedLaw {
        law_constant(SquareMatrix::diag(diag).unwrap(), Vector::zeros(diag.len()).unwrap()).unwrap()
    }

    #[test]
    fn constant_laws() {
        let th = Thresholds::default();
        let (r1, r2) = check_moment_conditions(&constant(&[0.5, 0.25]), 10_000, 0, &th).unwrap();
        assert_eq!(r1.verdict, Verdict::Holds);
        assert_eq!(r1.statistics["mean_log_norm"], 0.5f64.ln());
        assert_eq!(r2.verdict, Verdict::Fails);
        let (r1, _) = check_moment_conditions(&constant(&[1.0, 1.0]), 10_000, 0, &th).unwrap();
        assert_eq!(r1.statistics["mean_log_norm"], 0.0);
        assert_eq!(r1.verdict, Verdict::Fails);
    }

    #[test]
    fn unit_norm_mixture_fails_first_condition() {
        let law = law_frame_diagonal(
            FrameDiagonal::standard_frame(2).unwrap(),
            ScalarLaw::Coupled { tuples: vec![vec![1.0, 0.5], vec![0.5, 1.0]], weights: vec![0.5, 0.5] },
            VectorLaw::zero(2).unwrap(),
        )
        .unwrap();
        let (r1, _) = check_moment_conditions(&law, 10_000, 4, &Thresholds::default()).unwrap();
        assert_eq!(r1.verdict, Verdict::Fails);
        assert_eq!(r1.statistics["mean_log_norm"], 0.0);
    }

    #[test]
    fn zero_mass_is_reported() {
        let law = law_frame_diagonal(
            FrameDiagonal::standard_frame(1).unwrap(),
            ScalarLaw::Coupled { tuples: vec![vec![0.0], vec![3.0]], weights: vec![0.5, 0.5] },
            VectorLaw::zero(1).unwrap(),
        )
        .unwrap();
        let (r1, r2) = check_moment_conditions(&law, 10_000, 2, &Thresholds::default()).unwrap();
        assert_eq!(r1.verdict, Verdict::Fails);
        assert_eq!(r2.verdict, Verdict::Holds);
        assert!(r2.caveats.iter().any(|c| c.contains("M = 0")));
        let zm = r2.statistics["zero_mass"];
        assert!((zm - 0.5).abs() < 0.03);
    }

    #[test]
    fn truncated_mean_of_point_mass() {
        // −log‖M‖ ≡ 2: A_M(y) = min(y, 2)
        let a = TruncatedMean::new(&[2.0; 10], 5.0);
        assert!((a.at(1.0) - 1.0).abs() < 1e-9);
        assert!((a.at(4.0) - 2.0).abs() < 1e-2);
    }

    #[test]
    fn gaussian_entries_have_negative_log_mean() {
        let s = moment_summary(&law_gaussian_entries(2, 0.3, 0.0).unwrap(), 100_000, 1).unwrap();
        assert!(s.mean_log_norm + 4.0 * s.stderr_log_norm < 0.0, "{s:?}");
    }
}
