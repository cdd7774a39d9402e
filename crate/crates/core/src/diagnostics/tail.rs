use super::{Condition, ConditionReport, Method, Thresholds, Verdict};
use crate::error::{Error, Result};
use crate::report::fmt_ext;
use crate::simulate::Ensemble;

/// (vi) `Σ_t P(Y_t > x) < ∞` for every `x > 0`, checked on a finite grid.
///
/// HOLDS when the tail sum of `p̂_t(x)` over `t ∈ [T/2, T]` stays below
/// `vi_tail_sum` for every grid point; FAILS when some grid point keeps
/// `p̂_t(x) ≥ vi_fail_prob` throughout that tail.
pub fn check_condition_vi(ens: &Ensemble, x_grid: &[f64], th: &Thresholds) -> Result<ConditionReport> {
    if !ens.suffix_stats {
        return Err(Error::Config("condition (vi) needs an ensemble run with suffix statistics".into()));
    }
    if x_grid.is_empty() {
        return Err(Error::Config("empty x grid".into()));
    }
    let half = (ens.horizon / 2).max(1);
    let mut all_small = true;
    let mut some_stuck = false;
    let mut report = ConditionReport::new(Condition::Vi, Verdict::Inconclusive, Method::MonteCarlo);
    for x in x_grid {
        let p = ens.y_exceedance(*x);
        let tail = &p[half - 1..];
        let sum: f64 = tail.iter().sum();
        let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
        all_small &= sum < th.vi_tail_sum;
        some_stuck |= min >= th.vi_fail_prob;
        report.statistics.insert(format!("tail_sum[x={}]", fmt_ext(*x)), sum);
        report.statistics.insert(format!("tail_min_p[x={}]", fmt_ext(*x)), min);
    }
    report.verdict = if all_small {
        Verdict::Holds
    } else if some_stuck {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Ok(report
        .stat("horizon", ens.horizon as f64)
        .stat("replications", ens.replications() as f64)
        .caveat(format!(
            "\"for all x > 0\" is checked only on the grid {:?}",
            x_grid.iter().map(|x| fmt_ext(*x)).collect::<Vec<_>>()
        )))
}
