use rayon::prelude::*;
use serde::Serialize;

use super::{norm_product_logs, GalleryEntry, GalleryId, GalleryParams, OracleStep};
use crate::diagnostics::{
    contradictions, estimate_lyapunov, implication_violations, CheckContext, CheckRegistry, Condition, ConditionReport,
    Thresholds, Verdict,
};
use crate::error::{Error, Result};
use crate::report::ext_real;
use crate::simulate::{run_trajectory_observed, DrawRecorder, Ensemble, RunConfig, RunRecord};

/// Relative tolerance for oracles that are not expected to be bit-exact.
pub const ORACLE_RTOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub compared: usize,
    /// Every simulated value equals its oracle exactly.
    pub all_equal: bool,
    pub exact_required: bool,
    #[serde(serialize_with = "ext_real")]
    pub max_abs_error: f64,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Agrees,
    Inconclusive,
    Contradiction,
    Missing,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictCheck {
    pub condition: Condition,
    pub expected: Verdict,
    pub observed: Option<Verdict>,
    pub status: VerdictStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovCheck {
    #[serde(serialize_with = "ext_real")]
    pub lambda_hat: f64,
    #[serde(serialize_with = "ext_real")]
    pub stderr: f64,
    pub oracle: f64,
    /// `|λ̂ − λ| ≤ 3·stderr` (plus a 1e-12 floor for deterministic laws).
    pub within_3se: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub id: GalleryId,
    pub params: GalleryParams,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub oracles: Vec<OracleCheck>,
    pub verdicts: Vec<VerdictCheck>,
    pub lyapunov: LyapunovCheck,
    pub reports: Vec<ConditionReport>,
    /// Pairs of theorem conditions with opposite verdicts. With C0 HOLDS all
    /// six conditions must agree; otherwise only the surviving implications
    /// are checked.
    pub consistency_violations: Vec<(Condition, Condition)>,
    /// Human-readable notes on anything short of a clean pass.
    pub flags: Vec<String>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn contradicts_expectations(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == VerdictStatus::Contradiction)
    }
}

struct Accumulator {
    name: &'static str,
    exact_required: bool,
    compared: usize,
    all_equal: bool,
    max_err: f64,
    within_tol: bool,
}

impl Accumulator {
    fn new(name: &'static str, exact_required: bool) -> Self {
        Self { name, exact_required, compared: 0, all_equal: true, max_err: 0.0, within_tol: true }
    }

    fn push(&mut self, simulated: f64, oracle: f64) {
        self.compared += 1;
        if simulated == oracle {
            return;
        }
        self.all_equal = false;
        let err = (simulated - oracle).abs();
        let err = if err.is_nan() { f64::INFINITY } else { err };
        self.max_err = self.max_err.max(err);
        if err.is_nan() || err > ORACLE_RTOL * oracle.abs().max(1.0) {
            self.within_tol = false;
        }
    }

    fn merge(mut self, other: &Accumulator) -> Self {
        self.compared += other.compared;
        self.all_equal &= other.all_equal;
        self.max_err = self.max_err.max(other.max_err);
        self.within_tol &= other.within_tol;
        self
    }

    fn finish(self) -> OracleCheck {
        let passed = if self.exact_required { self.all_equal } else { self.within_tol };
        OracleCheck {
            name: self.name,
            compared: self.compared,
            all_equal: self.all_equal,
            exact_required: self.exact_required,
            max_abs_error: self.max_err,
            passed,
        }
    }
}

fn compare_path(entry: &GalleryEntry, path: &[RunRecord], draws: &DrawRecorder, suffix: bool) -> Vec<Accumulator> {
    let exact = entry.is_dyadic();
    // sums inside a logarithm are never bit-exact
    let exact_sums = exact && entry.id != GalleryId::R34;
    let oracle: Vec<OracleStep> = entry.oracle_path(&draws.draws);
    let np = norm_product_logs(&draws.draws);
    let mut acc = vec![
        Accumulator::new("prod_norm_log", exact),
        Accumulator::new("w_term_log", exact_sums),
        Accumulator::new("y_log", exact_sums),
        Accumulator::new("norm_product_log", exact),
        Accumulator::new("x_norm", exact),
    ];
    for (r, o) in path.iter().zip(&oracle) {
        acc[0].push(r.prod_norm_log, o.prod_norm_log);
        acc[1].push(r.w_term_log, o.w_term_log);
        if suffix {
            acc[2].push(r.y_log, o.y_log);
        }
        acc[3].push(np[r.t - 1], o.norm_product_log);
        if let Some(x) = o.x_norm {
            acc[4].push(r.x.iter().map(|e| e * e).sum::<f64>().sqrt(), x);
        }
    }
    acc
}

/// Simulates the entry, compares every oracle on every replication, runs
/// all registered checks and compares the verdicts with the expected ones.
///
/// INCONCLUSIVE never fails the run but is listed in `flags`.
pub fn verify(entry: &GalleryEntry, horizon: usize, replications: usize, seed: u64, th: &Thresholds) -> Result<VerifyReport> {
    th.validate()?;
    let cfg = RunConfig::new(entry.law.clone(), entry.z0.clone(), horizon, replications, seed)?;
    if !cfg.suffix_stats {
        return Err(Error::Config(format!(
            "verification needs suffix statistics, so the horizon must be at most {}",
            cfg.t_max
        )));
    }
    let runs = (0..replications as u64)
        .into_par_iter()
        .map(|s| {
            let mut rec = DrawRecorder::default();
            let path = run_trajectory_observed(&cfg, s, &mut rec)?;
            let acc = compare_path(entry, &path, &rec, cfg.suffix_stats);
            Ok((path, acc))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut totals: Option<Vec<Accumulator>> = None;
    let mut paths = Vec::with_capacity(runs.len());
    for (path, acc) in runs {
        totals = Some(match totals {
            None => acc,
            Some(t) => t.into_iter().zip(&acc).map(|(a, b)| a.merge(b)).collect(),
        });
        paths.push(path);
    }
    let oracles: Vec<OracleCheck> =
        totals.unwrap_or_default().into_iter().filter(|a| a.compared > 0).map(Accumulator::finish).collect();

    let ensemble =
        Ensemble { horizon, dim: cfg.dim(), seed, suffix_stats: cfg.suffix_stats, paths };
    let ctx = CheckContext { law: &entry.law, z0: &entry.z0, ensemble: &ensemble, thresholds: th, seed };
    let reports = CheckRegistry::with_builtins().run_all(&ctx)?;

    let verdicts: Vec<VerdictCheck> = entry
        .expected
        .iter()
        .map(|(c, want)| {
            let observed = reports.iter().find(|r| r.condition == *c).map(|r| r.verdict);
            let status = match observed {
                None => VerdictStatus::Missing,
                Some(Verdict::Inconclusive) => VerdictStatus::Inconclusive,
                Some(v) if v == *want => VerdictStatus::Agrees,
                Some(_) => VerdictStatus::Contradiction,
            };
            VerdictCheck { condition: *c, expected: *want, observed, status }
        })
        .collect();

    let c0_holds = reports.iter().any(|r| r.condition == Condition::C0 && r.verdict == Verdict::Holds);
    let consistency_violations = if c0_holds { contradictions(&reports) } else { implication_violations(&reports) };

    let est = estimate_lyapunov(&entry.law, horizon, replications, seed)?;
    let oracle = entry.lyapunov_oracle();
    let lyapunov = LyapunovCheck {
        lambda_hat: est.lambda_hat,
        stderr: est.stderr,
        oracle,
        within_3se: (est.lambda_hat - oracle).abs() <= 3.0 * est.stderr + 1e-12,
    };

    let mut flags = Vec::new();
    for o in oracles.iter().filter(|o| !o.passed) {
        flags.push(format!("oracle {} mismatch (max abs error {:e})", o.name, o.max_abs_error));
    }
    for v in &verdicts {
        match v.status {
            VerdictStatus::Agrees => {}
            VerdictStatus::Inconclusive => flags.push(format!("({}) INCONCLUSIVE, expected {}", v.condition, v.expected)),
            VerdictStatus::Contradiction => flags.push(format!(
                "({}) observed {}, expected {}",
                v.condition,
                v.observed.unwrap_or(Verdict::Inconclusive),
                v.expected
            )),
            VerdictStatus::Missing => flags.push(format!("({}) was not checked", v.condition)),
        }
    }
    for (a, b) in &consistency_violations {
        flags.push(format!("({a}) and ({b}) verdicts are inconsistent"));
    }
    if !lyapunov.within_3se {
        flags.push(format!("λ̂ = {} is not within 3 standard errors of {oracle}", lyapunov.lambda_hat));
    }

    let passed = oracles.iter().all(|o| o.passed)
        && verdicts.iter().all(|v| matches!(v.status, VerdictStatus::Agrees | VerdictStatus::Inconclusive))
        && consistency_violations.is_empty();
    Ok(VerifyReport {
        id: entry.id,
        params: entry.params.clone(),
        horizon,
        replications,
        seed,
        thresholds: th.clone(),
        oracles,
        verdicts,
        lyapunov,
        reports,
        consistency_violations,
        flags,
        passed,
    })
}
