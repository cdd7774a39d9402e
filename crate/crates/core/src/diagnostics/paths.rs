//! Per-replication classification for conditions (i)–(v).
//!
//! Each replication gets a converged / diverged / unclear label per
//! condition from its own tail. The labels for (ii), (iii), (iv), (v) are
//! then made consistent with the pathwise chain (ii) ⇒ (iii) ⇒ (iv) ⇒ (v):
//! on one path the true pattern is always "fails up to some point, holds
//! after", so any label that breaks that pattern is downgraded to unclear.
//! Verdicts aggregate the labels with the replication quorum.

use serde::Serialize;

use super::identity::energy_test_samples;
use super::stats::{is_rising, log_sum_exp};
use super::{Condition, ConditionReport, Method, Thresholds, Verdict};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::simulate::{Ensemble, RunRecord};

/// Below this horizon the (iv)/(v) rules have too short a tail to use.
pub const MIN_HORIZON_IV_V: usize = 100;
const MIN_HORIZON_II_III: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathVerdict {
    Converged,
    Diverged,
    Unclear,
}

fn label(conv: bool, div: bool) -> PathVerdict {
    match (conv, div) {
        (true, false) => PathVerdict::Converged,
        (false, true) => PathVerdict::Diverged,
        _ => PathVerdict::Unclear,
    }
}

struct Windows {
    q1: usize,
    half: usize,
    q3: usize,
    n: usize,
}

impl Windows {
    fn new(n: usize) -> Self {
        Self { q1: (n / 4).max(1), half: (n / 2).max(1), q3: 3 * n / 4, n }
    }

    fn tail_t(&self) -> Vec<f64> {
        (self.half..=self.n).map(|t| t as f64).collect()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Raw labels for (ii), (iii), (iv), (v) on one path, before the chain closure.
fn raw_labels(path: &[RunRecord], th: &Thresholds) -> [PathVerdict; 4] {
    let w = Windows::new(path.len());
    let wlog: Vec<f64> = path.iter().map(|r| r.w_term_log).collect();

    // (ii): Σ|W_t| from log-sum-exp over windows
    let total = log_sum_exp(&wlog);
    let inc_last = log_sum_exp(&wlog[w.q3..]);
    let inc_first = log_sum_exp(&wlog[..w.q1]);
    let conv_ii = inc_last == f64::NEG_INFINITY || inc_last < th.tail_tol.ln() + total;
    let div_ii = inc_last > f64::NEG_INFINITY && inc_last >= inc_first;

    // (iii): oscillation of V_t in the last and first quarters
    let last = path.last().unwrap();
    let (conv_iii, div_iii) = if last.v_overflow {
        (false, true)
    } else {
        let vt = &last.v_partial;
        let osc_last = path[w.q3..].iter().map(|r| dist(&r.v_partial, vt)).fold(0.0, f64::max);
        let vq = &path[w.q1 - 1].v_partial;
        let osc_first = path[..w.q1].iter().map(|r| dist(&r.v_partial, vq)).fold(0.0, f64::max);
        (osc_last < th.tail_tol * (1.0 + norm(vt)), osc_last > 0.0 && osc_last >= osc_first)
    };

    // (iv), (v): tail of log|W_t|
    let tail = &wlog[w.half - 1..];
    let rising = is_rising(&w.tail_t(), tail, th.min_rise);
    let tail_max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first_max = wlog[..w.q1].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let conv_iv = tail_max < th.small_log;
    let div_iv = rising || tail_max >= first_max;

    let mut running = f64::NEG_INFINITY;
    let mut last_record = 0;
    for (i, x) in wlog.iter().enumerate() {
        if *x > running {
            running = *x;
            last_record = i + 1;
        }
    }
    let conv_v = last_record <= w.half;
    let div_v = rising;

    [label(conv_ii, div_ii), label(conv_iii, div_iii), label(conv_iv, div_iv), label(conv_v, div_v)]
}

/// Enforces the "diverged prefix, converged suffix" pattern of the chain.
/// Labels caught between a converged one and a later diverged one clash and
/// become unclear.
fn close_chain(raw: [PathVerdict; 4]) -> [PathVerdict; 4] {
    let first_conv = raw.iter().position(|v| *v == PathVerdict::Converged).unwrap_or(4);
    let last_div = raw.iter().rposition(|v| *v == PathVerdict::Diverged);
    let (div_end, conv_start) = match last_div {
        Some(d) if d > first_conv => {
            let div_end = raw[..first_conv].iter().rposition(|v| *v == PathVerdict::Diverged);
            let conv_start =
                raw[d + 1..].iter().position(|v| *v == PathVerdict::Converged).map_or(4, |k| d + 1 + k);
            (div_end, conv_start)
        }
        other => (other, first_conv),
    };
    std::array::from_fn(|i| {
        if div_end.is_some_and(|d| i <= d) {
            PathVerdict::Diverged
        } else if i >= conv_start {
            PathVerdict::Converged
        } else {
            PathVerdict::Unclear
        }
    })
}

/// Closed per-path labels for (ii), (iii), (iv), (v), one row per replication.
pub fn chain_labels(ens: &Ensemble, th: &Thresholds) -> Vec<[PathVerdict; 4]> {
    ens.paths.iter().map(|p| close_chain(raw_labels(p, th))).collect()
}

fn aggregate(condition: Condition, labels: &[PathVerdict], th: &Thresholds) -> ConditionReport {
    let r = labels.len() as f64;
    let conv = labels.iter().filter(|l| **l == PathVerdict::Converged).count() as f64 / r;
    let div = labels.iter().filter(|l| **l == PathVerdict::Diverged).count() as f64 / r;
    let verdict = if conv >= th.quorum {
        Verdict::Holds
    } else if div >= th.quorum {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    ConditionReport::new(condition, verdict, Method::MonteCarlo)
        .stat("frac_converged", conv)
        .stat("frac_diverged", div)
        .stat("frac_unclear", 1.0 - conv - div)
        .stat("quorum", th.quorum)
}

fn finish(mut r: ConditionReport, ens: &Ensemble, min_horizon: usize) -> ConditionReport {
    r.statistics.insert("horizon".into(), ens.horizon as f64);
    r.statistics.insert("replications".into(), ens.replications() as f64);
    if ens.horizon < min_horizon {
        r.verdict = Verdict::Inconclusive;
        r.caveats.push(format!("horizon {} is below the minimum of {min_horizon} for this rule", ens.horizon));
    }
    r
}

/// (ii) `Σ|W_t| < ∞` and (iii) `Σ W_t` converges.
pub fn check_condition_ii_iii(ens: &Ensemble, th: &Thresholds) -> (ConditionReport, ConditionReport) {
    let labels = chain_labels(ens, th);
    let col = |k: usize| labels.iter().map(|l| l[k]).collect::<Vec<_>>();
    let ii = finish(aggregate(Condition::Ii, &col(0), th), ens, MIN_HORIZON_II_III)
        .stat("tail_tol", th.tail_tol)
        .caveat("converged: last-quarter increment of the partial sums below tail_tol times the total");
    let iii = finish(aggregate(Condition::Iii, &col(1), th), ens, MIN_HORIZON_II_III)
        .stat("tail_tol", th.tail_tol)
        .caveat("converged: last-quarter oscillation of V_t below tail_tol * (1 + |V_T|)");
    (ii, iii)
}

/// (iv) `W_t → 0` and (v) `sup_t |W_t| < ∞`.
pub fn check_condition_iv_v(ens: &Ensemble, th: &Thresholds) -> (ConditionReport, ConditionReport) {
    let labels = chain_labels(ens, th);
    let col = |k: usize| labels.iter().map(|l| l[k]).collect::<Vec<_>>();
    let iv = finish(aggregate(Condition::Iv, &col(2), th), ens, MIN_HORIZON_IV_V)
        .stat("small_log", th.small_log)
        .caveat("converged: max of log|W_t| over the second half below small_log");
    let v = finish(aggregate(Condition::V, &col(3), th), ens, MIN_HORIZON_IV_V)
        .caveat("converged: no new running maximum of |W_t| in the second half");
    (iv, v)
}

/// (i) `X_t` converges in distribution.
///
/// A replication diverges when `log|X_t|` trends upward over the second half
/// (or `X` overflowed). Convergence needs non-rising paths in a quorum and an
/// energy-distance test that cannot tell `X_{T/2}` from `X_T` across
/// replications.
pub fn check_condition_i(ens: &Ensemble, th: &Thresholds, seed: u64) -> Result<ConditionReport> {
    if ens.replications() < 2 {
        return Err(Error::Config("condition (i) needs at least two replications".into()));
    }
    let w = Windows::new(ens.horizon);
    let ts = w.tail_t();
    let r = ens.replications() as f64;
    let mut rising = 0usize;
    for p in &ens.paths {
        let overflow = p.last().unwrap().x_overflow;
        let xlog: Vec<f64> = p[w.half - 1..].iter().map(|rec| norm(&rec.x).ln()).collect();
        if overflow || is_rising(&ts, &xlog, th.min_rise) {
            rising += 1;
        }
    }
    let frac_rising = rising as f64 / r;
    let frac_steady = 1.0 - frac_rising;

    let mid: Vec<Vector> = ens.paths.iter().map(|p| Vector::from_raw_unchecked(p[w.half - 1].x.clone())).collect();
    let end: Vec<Vector> = ens.paths.iter().map(|p| Vector::from_raw_unchecked(p[w.n - 1].x.clone())).collect();
    let finite = |v: &[Vector]| v.iter().all(|x| x.as_slice().iter().all(|e| e.is_finite()));
    let (stat, p) = if finite(&mid) && finite(&end) {
        energy_test_samples(&mid, &end, th.permutations, seed)
    } else {
        (f64::INFINITY, 0.0)
    };
    let scale = 1.0 + end.iter().map(|x| norm(x.as_slice())).sum::<f64>() / r;
    let negligible = stat <= 1e-6 * scale;

    let verdict = if frac_steady >= th.quorum && (p > th.alpha || negligible) {
        Verdict::Holds
    } else if frac_rising >= th.quorum {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Ok(ConditionReport::new(Condition::I, verdict, Method::MonteCarlo)
        .stat("frac_rising", frac_rising)
        .stat("energy_statistic", stat)
        .stat("p_value", p)
        .stat("alpha", th.alpha)
        .stat("horizon", ens.horizon as f64)
        .stat("replications", r)
        .caveat("compares X at T/2 and at T on the same replications; the two samples are not independent"))
}

#[cfg(test)]
mod tests {
    use super::PathVerdict::{Converged as C, Diverged as D, Unclear as U};
    use super::*;

    #[test]
    fn closure_fills_the_monotone_pattern() {
        assert_eq!(close_chain([D, U, U, C]), [D, U, U, C]);
        assert_eq!(close_chain([U, D, U, U]), [D, D, U, U]);
        assert_eq!(close_chain([U, C, U, U]), [U, C, C, C]);
        assert_eq!(close_chain([C, U, U, U]), [C, C, C, C]);
        assert_eq!(close_chain([U, U, U, D]), [D, D, D, D]);
    }

    #[test]
    fn closure_drops_clashing_labels() {
        // converged (ii) with diverged (iv) cannot both be right
        assert_eq!(close_chain([C, U, D, U]), [U, U, U, U]);
        assert_eq!(close_chain([D, C, D, C]), [D, U, U, C]);
        assert_eq!(close_chain([C, D, C, C]), [U, U, C, C]);
    }
}
