use rayon::prelude::*;
use serde::Serialize;

use super::{run_trajectory, RunConfig, RunRecord};
use crate::error::Result;
use crate::report::{ext_real, ext_real_vec};

/// Log-spaced surrogate for "every x > 0" in the tail-probability statistics.
pub const DEFAULT_X_GRID: [f64; 5] = [1e-3, 1e-2, 1e-1, 1.0, 10.0];

/// All replications of one configuration, ordered by stream id.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub horizon: usize,
    pub dim: usize,
    pub seed: u64,
    pub suffix_stats: bool,
    pub paths: Vec<Vec<RunRecord>>,
}

/// Runs replications `0..R` in parallel on the current rayon pool.
///
/// Paths are collected in stream order, so the result does not depend on
/// the number of worker threads.
pub fn run_ensemble(cfg: &RunConfig) -> Result<Ensemble> {
    run_ensemble_with(cfg, run_trajectory)
}

/// Like [`run_ensemble`] but with a custom per-stream runner.
pub fn run_ensemble_with<F>(cfg: &RunConfig, runner: F) -> Result<Ensemble>
where
    F: Fn(&RunConfig, u64) -> Result<Vec<RunRecord>> + Sync,
{
    cfg.validate()?;
    let paths = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|s| runner(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { horizon: cfg.horizon, dim: cfg.dim(), seed: cfg.seed, suffix_stats: cfg.suffix_stats, paths })
}

impl Ensemble {
    pub fn replications(&self) -> usize {
        self.paths.len()
    }

    /// `f` applied to step `t` (1-based) of every replication.
    pub fn column(&self, t: usize, f: impl Fn(&RunRecord) -> f64) -> Vec<f64> {
        self.paths.iter().map(|p| f(&p[t - 1])).collect()
    }

    /// Empirical `P(Y_t > x)` for `t = 1..=T`; `nan` without suffix statistics.
    pub fn y_exceedance(&self, x: f64) -> Vec<f64> {
        let lx = x.ln();
        let r = self.replications() as f64;
        (1..=self.horizon)
            .map(|t| {
                if !self.suffix_stats {
                    return f64::NAN;
                }
                let hits = self.paths.iter().filter(|p| p[t - 1].y_log > lx).count();
                hits as f64 / r
            })
            .collect()
    }

    pub fn summary(&self, x_grid: &[f64]) -> EnsembleSummary {
        let exceed: Vec<Vec<f64>> = x_grid.iter().map(|x| self.y_exceedance(*x)).collect();
        let r = self.replications() as f64;
        let steps = (1..=self.horizon)
            .map(|t| {
                let mut w = self.column(t, |rec| rec.w_term_log);
                w.sort_by(f64::total_cmp);
                let prod = self.column(t, |rec| rec.prod_norm_log);
                let xo = self.paths.iter().filter(|p| p[t - 1].x_overflow).count() as f64;
                let vo = self.paths.iter().filter(|p| p[t - 1].v_overflow).count() as f64;
                StepSummary {
                    t,
                    w_log_mean: mean(&w),
                    w_log_q05: quantile_sorted(&w, 0.05),
                    w_log_q50: quantile_sorted(&w, 0.5),
                    w_log_q95: quantile_sorted(&w, 0.95),
                    prod_norm_log_mean: mean(&prod),
                    p_y_exceeds: exceed.iter().map(|col| col[t - 1]).collect(),
                    x_overflow_frac: xo / r,
                    v_overflow_frac: vo / r,
                }
            })
            .collect();
        EnsembleSummary {
            horizon: self.horizon,
            replications: self.replications(),
            seed: self.seed,
            x_grid: x_grid.to_vec(),
            steps,
        }
    }
}

/// Cross-replication statistics at one step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepSummary {
    pub t: usize,
    #[serde(serialize_with = "ext_real")]
    pub w_log_mean: f64,
    #[serde(serialize_with = "ext_real")]
    pub w_log_q05: f64,
    #[serde(serialize_with = "ext_real")]
    pub w_log_q50: f64,
    #[serde(serialize_with = "ext_real")]
    pub w_log_q95: f64,
    #[serde(serialize_with = "ext_real")]
    pub prod_norm_log_mean: f64,
    /// `P(Y_t > x)` for each grid point, in grid order.
    #[serde(serialize_with = "ext_real_vec")]
    pub p_y_exceeds: Vec<f64>,
    pub x_overflow_frac: f64,
    pub v_overflow_frac: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub x_grid: Vec<f64>,
    pub steps: Vec<StepSummary>,
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Nearest-rank quantile of sorted data; never interpolates, so infinite
/// values stay meaningful.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{law_frame_diagonal, law_gaussian_entries, FrameDiagonal, ScalarLaw, VectorLaw};
    use crate::linalg::Vector;

    #[test]
    fn fixed_direction_keeps_tail_probability_one() {
        let law = law_frame_diagonal(
            FrameDiagonal::standard_frame(2).unwrap(),
            ScalarLaw::constant(&[0.5, 1.0]),
            VectorLaw::constant(Vector::unit(2, 1).unwrap()),
        )
        .unwrap();
        let cfg = RunConfig::new(law, VectorLaw::zero(2).unwrap(), 40, 3, 0).unwrap();
        let ens = run_ensemble(&cfg).unwrap();
        let p = ens.y_exceedance(0.5);
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|x| *x == 1.0));
    }

    #[test]
    fn single_replication_summary_is_the_run() {
        let law = law_gaussian_entries(2, 0.7, 1.0).unwrap();
        let cfg = RunConfig::new(law, VectorLaw::zero(2).unwrap(), 25, 1, 8).unwrap();
        let ens = run_ensemble(&cfg).unwrap();
        let run = run_trajectory(&cfg, 0).unwrap();
        let s = ens.summary(&DEFAULT_X_GRID);
        for (st, rec) in s.steps.iter().zip(&run) {
            assert_eq!(st.w_log_mean, rec.w_term_log);
            assert_eq!(st.w_log_q05, rec.w_term_log);
            assert_eq!(st.w_log_q95, rec.w_term_log);
            assert_eq!(st.prod_norm_log_mean, rec.prod_norm_log);
        }
    }

    #[test]
    fn thread_count_does_not_matter() {
        let law = law_gaussian_entries(3, 0.5, 1.0).unwrap();
        let cfg = RunConfig::new(law, VectorLaw::zero(3).unwrap(), 50, 12, 21).unwrap();
        let run_on = |n| {
            rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| run_ensemble(&cfg).unwrap())
        };
        assert_eq!(run_on(1).paths, run_on(4).paths);
    }

    #[test]
    fn nearest_rank_quantiles() {
        let xs = [f64::NEG_INFINITY, 1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&xs, 0.05), f64::NEG_INFINITY);
        assert_eq!(quantile_sorted(&xs, 0.5), 1.0);
        assert_eq!(quantile_sorted(&xs, 0.95), 3.0);
    }
}
