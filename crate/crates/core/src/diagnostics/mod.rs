//! Three-way verdicts (HOLDS / FAILS / INCONCLUSIVE) for norm convergence of
//! the coefficient products (C0), the six equivalent conditions (i)–(vi),
//! two moment conditions, plus the Lyapunov exponent estimator and a
//! distributional-identity test.
//!
//! Almost-sure limits cannot be decided from finitely many steps. Every
//! procedure here classifies each replication from its tail behaviour and
//! then aggregates with a replication quorum; the defaults live in
//! [`Thresholds`] and are embedded in every report.

mod identity;
mod lyapunov;
mod moments;
mod paths;
mod stats;
mod tail;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{SharedLaw, VectorLaw};
use crate::report::ext_real_map;
use crate::simulate::{Ensemble, DEFAULT_X_GRID};

pub use identity::{energy_distance, test_distributional_identity, IdentityTest};
pub use lyapunov::{check_c0, check_c0_with, estimate_lyapunov, LyapunovEstimate};
pub use moments::{check_moment_conditions, MomentSummary};
pub use paths::{check_condition_i, check_condition_ii_iii, check_condition_iv_v, PathVerdict};
pub use tail::check_condition_vi;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    /// HOLDS against FAILS; INCONCLUSIVE never contradicts anything.
    pub fn contradicts(self, other: Verdict) -> bool {
        matches!((self, other), (Verdict::Holds, Verdict::Fails) | (Verdict::Fails, Verdict::Holds))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "HOLDS",
            Verdict::Fails => "FAILS",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    C0,
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    Ii,
    #[serde(rename = "iii")]
    Iii,
    #[serde(rename = "iv")]
    Iv,
    #[serde(rename = "v")]
    V,
    #[serde(rename = "vi")]
    Vi,
    R36i,
    R36ii,
}

impl Condition {
    /// C0 followed by the six conditions of the equivalence theorem.
    pub const THEOREM: [Condition; 7] =
        [Condition::C0, Condition::I, Condition::Ii, Condition::Iii, Condition::Iv, Condition::V, Condition::Vi];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::C0 => "C0",
            Condition::I => "i",
            Condition::Ii => "ii",
            Condition::Iii => "iii",
            Condition::Iv => "iv",
            Condition::V => "v",
            Condition::Vi => "vi",
            Condition::R36i => "R36i",
            Condition::R36ii => "R36ii",
        }
    }

    pub fn parse(s: &str) -> Option<Condition> {
        [
            Condition::C0,
            Condition::I,
            Condition::Ii,
            Condition::Iii,
            Condition::Iv,
            Condition::V,
            Condition::Vi,
            Condition::R36i,
            Condition::R36ii,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A verdict with the statistics that back it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub verdict: Verdict,
    pub method: Method,
    #[serde(serialize_with = "ext_real_map")]
    pub statistics: BTreeMap<String, f64>,
    pub caveats: Vec<String>,
}

impl ConditionReport {
    pub fn new(condition: Condition, verdict: Verdict, method: Method) -> Self {
        Self { condition, verdict, method, statistics: BTreeMap::new(), caveats: Vec::new() }
    }

    pub fn stat(mut self, name: &str, value: f64) -> Self {
        self.statistics.insert(name.to_string(), value);
        self
    }

    pub fn caveat(mut self, text: impl Into<String>) -> Self {
        self.caveats.push(text.into());
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// Decision thresholds. All are practical choices, not derived quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Width, in standard errors, of the Lyapunov sign test.
    pub c0_sigma: f64,
    /// Fraction of replications that must agree before HOLDS or FAILS.
    pub quorum: f64,
    /// Relative size of the last-quarter increment that counts as converged.
    pub tail_tol: f64,
    /// `log` of the level below which a term counts as negligible.
    pub small_log: f64,
    /// Largest tail sum of `P(Y_t > x)` compatible with summability.
    pub vi_tail_sum: f64,
    /// Tail probability that, held over the whole tail, means non-summable.
    pub vi_fail_prob: f64,
    /// Smallest total rise (in nats over the tail window) that counts as growth.
    pub min_rise: f64,
    /// Significance level of the permutation tests.
    pub alpha: f64,
    pub permutations: usize,
    /// Monte Carlo draws for the moment conditions.
    pub moment_samples: usize,
    pub x_grid: Vec<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            c0_sigma: 3.0,
            quorum: 0.95,
            tail_tol: 1e-6,
            small_log: -(1e3f64).ln(),
            vi_tail_sum: 0.01,
            vi_fail_prob: 0.5,
            min_rise: 0.5,
            alpha: 0.05,
            permutations: 200,
            moment_samples: 10_000,
            x_grid: DEFAULT_X_GRID.to_vec(),
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        unit("quorum", self.quorum)?;
        unit("alpha", self.alpha)?;
        unit("vi_fail_prob", self.vi_fail_prob)?;
        positive("c0_sigma", self.c0_sigma)?;
        positive("tail_tol", self.tail_tol)?;
        positive("vi_tail_sum", self.vi_tail_sum)?;
        positive("min_rise", self.min_rise)?;
        if !self.small_log.is_finite() {
            return Err(Error::Config("small_log must be finite".into()));
        }
        if self.quorum <= 0.5 {
            return Err(Error::Config("quorum must exceed 1/2".into()));
        }
        if self.x_grid.is_empty() || self.x_grid.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Config("x grid must be a nonempty list of positive numbers".into()));
        }
        Ok(())
    }
}

/// Inputs shared by the condition checkers.
#[derive(Clone, Copy)]
pub struct CheckContext<'a> {
    pub law: &'a SharedLaw,
    pub z0: &'a VectorLaw,
    pub ensemble: &'a Ensemble,
    pub thresholds: &'a Thresholds,
    pub seed: u64,
}

/// A named procedure producing one or more condition reports.
pub trait ConditionCheck: Send + Sync {
    fn name(&self) -> &'static str;
    fn conditions(&self) -> &'static [Condition];
    fn check(&self, ctx: &CheckContext<'_>) -> Result<Vec<ConditionReport>>;
}

struct FnCheck {
    name: &'static str,
    conditions: &'static [Condition],
    run: fn(&CheckContext<'_>) -> Result<Vec<ConditionReport>>,
}

impl ConditionCheck for FnCheck {
    fn name(&self) -> &'static str {
        self.name
    }

    fn conditions(&self) -> &'static [Condition] {
        self.conditions
    }

    fn check(&self, ctx: &CheckContext<'_>) -> Result<Vec<ConditionReport>> {
        (self.run)(ctx)
    }
}

/// Checkers in registration order.
#[derive(Clone, Default)]
pub struct CheckRegistry {
    checks: Vec<Arc<dyn ConditionCheck>>,
}

impl CheckRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(FnCheck {
            name: "c0",
            conditions: &[Condition::C0],
            run: |c| {
                let e = c.ensemble;
                Ok(vec![check_c0_with(c.law, e.horizon, e.replications(), c.seed, c.thresholds)?.1])
            },
        }));
        r.register(Arc::new(FnCheck {
            name: "i",
            conditions: &[Condition::I],
            run: |c| Ok(vec![check_condition_i(c.ensemble, c.thresholds, c.seed)?]),
        }));
        r.register(Arc::new(FnCheck {
            name: "ii-iii",
            conditions: &[Condition::Ii, Condition::Iii],
            run: |c| {
                let (a, b) = check_condition_ii_iii(c.ensemble, c.thresholds);
                Ok(vec![a, b])
            },
        }));
        r.register(Arc::new(FnCheck {
            name: "iv-v",
            conditions: &[Condition::Iv, Condition::V],
            run: |c| {
                let (a, b) = check_condition_iv_v(c.ensemble, c.thresholds);
                Ok(vec![a, b])
            },
        }));
        r.register(Arc::new(FnCheck {
            name: "vi",
            conditions: &[Condition::Vi],
            run: |c| Ok(vec![check_condition_vi(c.ensemble, &c.thresholds.x_grid, c.thresholds)?]),
        }));
        r.register(Arc::new(FnCheck {
            name: "moments",
            conditions: &[Condition::R36i, Condition::R36ii],
            run: |c| {
                let (a, b) = check_moment_conditions(c.law, c.thresholds.moment_samples, c.seed, c.thresholds)?;
                Ok(vec![a, b])
            },
        }));
        r
    }

    pub fn register(&mut self, check: Arc<dyn ConditionCheck>) {
        self.checks.push(check);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.checks.iter().map(|c| c.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn ConditionCheck>> {
        self.checks.iter().find(|c| c.name() == name)
    }

    /// Runs every registered check, in order.
    pub fn run_all(&self, ctx: &CheckContext<'_>) -> Result<Vec<ConditionReport>> {
        let mut out = Vec::new();
        for c in &self.checks {
            out.extend(c.check(ctx)?);
        }
        Ok(out)
    }
}

impl fmt::Debug for CheckRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

/// Pairs of theorem conditions whose verdicts contradict each other.
///
/// Only meaningful when C0 holds; without it the equivalences break down.
pub fn contradictions(reports: &[ConditionReport]) -> Vec<(Condition, Condition)> {
    let theorem: Vec<&ConditionReport> =
        reports.iter().filter(|r| Condition::THEOREM[1..].contains(&r.condition)).collect();
    let mut out = Vec::new();
    for (i, a) in theorem.iter().enumerate() {
        for b in &theorem[i + 1..] {
            if a.verdict.contradicts(b.verdict) {
                out.push((a.condition, b.condition));
            }
        }
    }
    out
}

/// Violations of the implications that survive without C0:
/// (ii) ⇒ (iii) ⇒ (iv) ⇒ (v) and (iv) ⇒ (vi).
pub fn implication_violations(reports: &[ConditionReport]) -> Vec<(Condition, Condition)> {
    let verdict = |c: Condition| reports.iter().find(|r| r.condition == c).map(|r| r.verdict);
    let chain = [Condition::Ii, Condition::Iii, Condition::Iv, Condition::V];
    let mut pairs: Vec<(Condition, Condition)> = Vec::new();
    for (i, a) in chain.iter().enumerate() {
        for b in &chain[i + 1..] {
            pairs.push((*a, *b));
        }
    }
    pairs.push((Condition::Iv, Condition::Vi));
    pairs
        .into_iter()
        .filter(|(a, b)| verdict(*a) == Some(Verdict::Holds) && verdict(*b) == Some(Verdict::Fails))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_json_shape() {
        let r = ConditionReport::new(Condition::Vi, Verdict::Inconclusive, Method::MonteCarlo)
            .stat("tail_sum", f64::INFINITY)
            .caveat("grid");
        let v = r.to_json();
        assert_eq!(v["condition"], "vi");
        assert_eq!(v["verdict"], "INCONCLUSIVE");
        assert_eq!(v["method"], "monte-carlo");
        assert_eq!(v["statistics"]["tail_sum"], "inf");
        assert_eq!(v["caveats"][0], "grid");
    }

    #[test]
    fn threshold_validation() {
        Thresholds::default().validate().unwrap();
        let bad = Thresholds { quorum: 1.5, ..Thresholds::default() };
        assert!(bad.validate().is_err());
        let bad = Thresholds { tail_tol: 0.0, ..Thresholds::default() };
        assert!(bad.validate().is_err());
        let parsed: Thresholds = serde_json::from_str(r#"{"quorum": 0.9}"#).unwrap();
        assert_eq!(parsed.quorum, 0.9);
        assert_eq!(parsed.c0_sigma, 3.0);
    }

    #[test]
    fn condition_names_round_trip() {
        for c in Condition::THEOREM.into_iter().chain([Condition::R36i, Condition::R36ii]) {
            assert_eq!(Condition::parse(c.as_str()), Some(c));
            assert_eq!(serde_json::to_value(c).unwrap(), c.as_str());
        }
    }

    #[test]
    fn contradiction_detection() {
        let mk = |c, v| ConditionReport::new(c, v, Method::MonteCarlo);
        let rs = vec![
            mk(Condition::C0, Verdict::Holds),
            mk(Condition::Ii, Verdict::Holds),
            mk(Condition::Iv, Verdict::Inconclusive),
            mk(Condition::V, Verdict::Fails),
        ];
        assert_eq!(contradictions(&rs), vec![(Condition::Ii, Condition::V)]);
        assert_eq!(implication_violations(&rs), vec![(Condition::Ii, Condition::V)]);
    }
}
