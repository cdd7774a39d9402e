//! Randomised scan for laws with (vi) HOLDS and (v) FAILS outside C0.
//!
//! Families are parameterised law generators registered by JSON `kind`:
//!
//! ```json
//! {"kind": "fixed", "law": {...law document...}}
//! {"kind": "gallery", "id": "E34", "params": {"alpha": 0.5}}
//! {"kind": "frame-diagonal", "dim": 2, "atoms": 2, "log_range": [-1.5, 1.5],
//!  "random_frame": true, "z_std": 1.0}
//! {"kind": "gaussian-entries", "dim": 2, "entry_std": [0.5, 2.0], "z_std": 1.0}
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{build, GalleryId, GalleryParams};
use crate::diagnostics::{check_condition_iv_v, check_condition_vi, estimate_lyapunov, Thresholds, Verdict};
use crate::error::{Error, Result};
use crate::law::{law_frame_diagonal, law_gaussian_entries, LawDocument, LawRegistry, ScalarLaw, SharedLaw, VectorLaw};
use crate::linalg::Vector;
use crate::report::ext_real;
use crate::rng::RngStream;
use crate::simulate::{run_ensemble, RunConfig};

pub const SEARCH_LABEL: &str = "numerical evidence only; does not resolve the open problem";

/// A parameterised family of `(pair law, Z_0 law)`.
pub trait LawFamily: fmt::Debug + Send + Sync {
    fn kind(&self) -> &'static str;

    /// True when every draw is the same law.
    fn is_single(&self) -> bool {
        false
    }

    fn draw(&self, rng: &mut RngStream) -> Result<(SharedLaw, VectorLaw)>;

    fn to_json(&self) -> Value;
}

pub type FamilyParser = fn(&Value, &LawRegistry) -> Result<Arc<dyn LawFamily>>;

#[derive(Clone)]
pub struct FamilyRegistry {
    parsers: BTreeMap<&'static str, FamilyParser>,
    laws: LawRegistry,
}

impl FamilyRegistry {
    pub fn empty(laws: LawRegistry) -> Self {
        Self { parsers: BTreeMap::new(), laws }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty(LawRegistry::with_builtins());
        r.register("fixed", parse_fixed);
        r.register("gallery", parse_gallery);
        r.register("frame-diagonal", parse_frame_family);
        r.register("gaussian-entries", parse_gaussian_family);
        r
    }

    pub fn register(&mut self, kind: &'static str, parser: FamilyParser) {
        self.parsers.insert(kind, parser);
    }

    pub fn kinds(&self) -> Vec<&'static str> {
        self.parsers.keys().copied().collect()
    }

    pub fn parse(&self, doc: &Value) -> Result<Arc<dyn LawFamily>> {
        let kind = doc
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Config("family document needs a string \"kind\" field".into()))?;
        let parser = self.parsers.get(kind).ok_or_else(|| {
            Error::Config(format!("unknown family kind {kind:?}; known kinds: {:?}", self.kinds()))
        })?;
        parser(doc, &self.laws)
    }
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl fmt::Debug for FamilyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.parsers.keys()).finish()
    }
}

fn body<T: serde::de::DeserializeOwned>(doc: &Value) -> Result<T> {
    let mut doc = doc.clone();
    if let Some(map) = doc.as_object_mut() {
        map.remove("kind");
    }
    serde_json::from_value(doc).map_err(|e| Error::Config(format!("bad family document: {e}")))
}

#[derive(Debug)]
struct Fixed {
    doc: LawDocument,
    source: Value,
}

impl LawFamily for Fixed {
    fn kind(&self) -> &'static str {
        "fixed"
    }

    fn is_single(&self) -> bool {
        true
    }

    fn draw(&self, _: &mut RngStream) -> Result<(SharedLaw, VectorLaw)> {
        Ok((self.doc.law.clone(), self.doc.z0.clone()))
    }

    fn to_json(&self) -> Value {
        self.source.clone()
    }
}

fn parse_fixed(doc: &Value, laws: &LawRegistry) -> Result<Arc<dyn LawFamily>> {
    let law = doc.get("law").ok_or_else(|| Error::Config("fixed family needs a \"law\" field".into()))?;
    Ok(Arc::new(Fixed { doc: LawDocument::parse(law, laws)?, source: doc.clone() }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GallerySpec {
    id: String,
    #[serde(default)]
    params: GalleryParams,
}

fn parse_gallery(doc: &Value, _: &LawRegistry) -> Result<Arc<dyn LawFamily>> {
    let spec: GallerySpec = body(doc)?;
    let entry = build(spec.id.parse::<GalleryId>()?, spec.params)?;
    let source = json!({"kind": "gallery", "id": entry.id, "params": entry.params});
    Ok(Arc::new(Fixed { doc: LawDocument { law: entry.law, z0: entry.z0 }, source }))
}

/// Coupled frame-diagonal laws: `atoms` coefficient tuples with
/// log-magnitudes uniform on `log_range`, random signs if `signed`,
/// Dirichlet(1) weights, and a uniformly random frame if `random_frame`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameFamily {
    pub dim: usize,
    #[serde(default = "default_atoms")]
    pub atoms: usize,
    #[serde(default = "default_log_range")]
    pub log_range: [f64; 2],
    #[serde(default)]
    pub signed: bool,
    #[serde(default)]
    pub random_frame: bool,
    #[serde(default = "default_z_std")]
    pub z_std: f64,
}

fn default_atoms() -> usize {
    2
}

fn default_log_range() -> [f64; 2] {
    [-1.5, 1.5]
}

fn default_z_std() -> f64 {
    1.0
}

fn check_range(name: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
        return Err(Error::Config(format!("{name} must be an increasing pair of finite numbers")));
    }
    Ok(())
}

fn random_frame(d: usize, rng: &mut RngStream) -> Result<Vec<Vector>> {
    loop {
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut ok = true;
        for _ in 0..d {
            let mut v: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            for _ in 0..2 {
                for u in &frame {
                    let c: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
                }
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-8 {
                ok = false;
                break;
            }
            frame.push(v.into_iter().map(|x| x / n).collect());
        }
        if ok {
            return frame.into_iter().map(Vector::new).collect();
        }
    }
}

impl LawFamily for FrameFamily {
    fn kind(&self) -> &'static str {
        "frame-diagonal"
    }

    fn draw(&self, rng: &mut RngStream) -> Result<(SharedLaw, VectorLaw)> {
        let d = self.dim;
        let frame = if self.random_frame {
            random_frame(d, rng)?
        } else {
            crate::law::FrameDiagonal::standard_frame(d)?
        };
        let [lo, hi] = self.log_range;
        let tuples: Vec<Vec<f64>> = (0..self.atoms)
            .map(|_| {
                (0..d)
                    .map(|_| {
                        let a = rng.uniform_in(lo, hi).exp();
                        if self.signed && rng.uniform() < 0.5 {
                            -a
                        } else {
                            a
                        }
                    })
                    .collect()
            })
            .collect();
        let raw: Vec<f64> = (0..self.atoms).map(|_| -(1.0 - rng.uniform()).ln()).collect();
        let total: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let head: f64 = weights[..self.atoms - 1].iter().sum();
        weights[self.atoms - 1] = (1.0 - head).max(0.0);
        let z = if self.z_std == 0.0 {
            VectorLaw::zero(d)?
        } else {
            VectorLaw::gaussian(Vector::zeros(d)?, self.z_std)?
        };
        Ok((law_frame_diagonal(frame, ScalarLaw::Coupled { tuples, weights }, z)?, VectorLaw::zero(d)?))
    }

    fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self).unwrap_or(Value::Null);
        if let Some(map) = v.as_object_mut() {
            map.insert("kind".into(), json!("frame-diagonal"));
        }
        v
    }
}

fn parse_frame_family(doc: &Value, _: &LawRegistry) -> Result<Arc<dyn LawFamily>> {
    let f: FrameFamily = body(doc)?;
    if f.dim == 0 || f.atoms == 0 {
        return Err(Error::Config("frame-diagonal family needs dim >= 1 and atoms >= 1".into()));
    }
    check_range("log_range", f.log_range)?;
    if !(f.z_std.is_finite() && f.z_std >= 0.0) {
        return Err(Error::Config("z_std must be finite and >= 0".into()));
    }
    Ok(Arc::new(f))
}

/// Gaussian-entry laws with `entry_std` uniform on the given range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianFamily {
    pub dim: usize,
    pub entry_std: [f64; 2],
    #[serde(default = "default_z_std")]
    pub z_std: f64,
}

impl LawFamily for GaussianFamily {
    fn kind(&self) -> &'static str {
        "gaussian-entries"
    }

    fn draw(&self, rng: &mut RngStream) -> Result<(SharedLaw, VectorLaw)> {
        let s = rng.uniform_in(self.entry_std[0], self.entry_std[1]);
        Ok((law_gaussian_entries(self.dim, s, self.z_std)?, VectorLaw::zero(self.dim)?))
    }

    fn to_json(&self) -> Value {
        json!({"kind": "gaussian-entries", "dim": self.dim, "entry_std": self.entry_std, "z_std": self.z_std})
    }
}

fn parse_gaussian_family(doc: &Value, _: &LawRegistry) -> Result<Arc<dyn LawFamily>> {
    let f: GaussianFamily = body(doc)?;
    if f.dim == 0 {
        return Err(Error::Config("gaussian-entries family needs dim >= 1".into()));
    }
    check_range("entry_std", f.entry_std)?;
    if f.entry_std[0] < 0.0 || !(f.z_std.is_finite() && f.z_std >= 0.0) {
        return Err(Error::Config("standard deviations must be >= 0".into()));
    }
    Ok(Arc::new(f))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub horizon: usize,
    pub replications: usize,
    pub thresholds: Thresholds,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self { horizon: 200, replications: 32, thresholds: Thresholds::default() }
    }
}

/// One scanned law.
#[derive(Clone, Debug, Serialize)]
pub struct Evaluation {
    pub index: usize,
    pub law: Value,
    #[serde(serialize_with = "ext_real")]
    pub lambda_hat: f64,
    #[serde(serialize_with = "ext_real")]
    pub lambda_stderr: f64,
    /// `λ̂ ≥ 0`, i.e. outside the C0 regime.
    pub admitted: bool,
    pub v: Option<Verdict>,
    pub vi: Option<Verdict>,
    /// `min(frac_diverged(v) − quorum, 1 − max_x tail_sum(x) / vi_tail_sum)`;
    /// nonnegative exactly for candidates.
    #[serde(serialize_with = "ext_real")]
    pub margin: f64,
    pub candidate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub label: &'static str,
    pub family: Value,
    pub budget: usize,
    pub seed: u64,
    pub settings: SearchSettings,
    pub admitted: usize,
    pub rejected: usize,
    pub evaluations: Vec<Evaluation>,
    /// Admitted laws with (vi) HOLDS and (v) FAILS, by decreasing margin.
    pub candidates: Vec<Evaluation>,
}

fn evaluate(index: usize, law: SharedLaw, z0: VectorLaw, seed: u64, s: &SearchSettings) -> Result<Evaluation> {
    let th = &s.thresholds;
    let est = estimate_lyapunov(&law, s.horizon, s.replications, seed)?;
    let mut ev = Evaluation {
        index,
        law: LawDocument { law: law.clone(), z0: z0.clone() }.to_json(),
        lambda_hat: est.lambda_hat,
        lambda_stderr: est.stderr,
        admitted: est.lambda_hat >= 0.0,
        v: None,
        vi: None,
        margin: f64::NEG_INFINITY,
        candidate: false,
    };
    if !ev.admitted {
        return Ok(ev);
    }
    let cfg = RunConfig::new(law, z0, s.horizon, s.replications, seed)?.with_suffix_stats(true);
    let ens = run_ensemble(&cfg)?;
    let (_, v) = check_condition_iv_v(&ens, th);
    let vi = check_condition_vi(&ens, &th.x_grid, th)?;
    let diverged = v.statistics.get("frac_diverged").copied().unwrap_or(0.0);
    let worst_tail = vi
        .statistics
        .iter()
        .filter(|(k, _)| k.starts_with("tail_sum["))
        .map(|(_, x)| *x)
        .fold(0.0, f64::max);
    ev.margin = (diverged - th.quorum).min(1.0 - worst_tail / th.vi_tail_sum);
    ev.candidate = vi.verdict == Verdict::Holds && v.verdict == Verdict::Fails;
    ev.v = Some(v.verdict);
    ev.vi = Some(vi.verdict);
    Ok(ev)
}

/// Scans `budget` draws from `family`.
///
/// Draw `i` uses parameter stream `(seed, i)`; every draw is simulated with
/// the same `seed`, so candidates are compared on common random numbers.
/// A single-law family is evaluated once and must have `λ̂ ≥ 0`.
pub fn search_open_problem(
    family: &dyn LawFamily,
    budget: usize,
    seed: u64,
    settings: &SearchSettings,
) -> Result<SearchReport> {
    settings.thresholds.validate()?;
    if settings.horizon == 0 || settings.replications == 0 {
        return Err(Error::Config("search needs a positive horizon and replication count".into()));
    }
    let draws = if family.is_single() { budget.min(1) } else { budget };
    let evaluations = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let (law, z0) = family.draw(&mut rng)?;
            evaluate(i, law, z0, seed, settings)
        })
        .collect::<Result<Vec<_>>>()?;
    if family.is_single() {
        if let Some(e) = evaluations.first().filter(|e| !e.admitted) {
            return Err(Error::InvalidInput(format!(
                "the family's law has λ̂ = {} < 0, so C0 holds and the question does not arise",
                e.lambda_hat
            )));
        }
    }
    let mut candidates: Vec<Evaluation> = evaluations.iter().filter(|e| e.candidate).cloned().collect();
    candidates.sort_by(|a, b| b.margin.total_cmp(&a.margin).then(a.index.cmp(&b.index)));
    let admitted = evaluations.iter().filter(|e| e.admitted).count();
    Ok(SearchReport {
        label: SEARCH_LABEL,
        family: family.to_json(),
        budget,
        seed,
        settings: settings.clone(),
        admitted,
        rejected: evaluations.len() - admitted,
        evaluations,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(doc: Value) -> Arc<dyn LawFamily> {
        FamilyRegistry::with_builtins().parse(&doc).unwrap()
    }

    fn quick() -> SearchSettings {
        SearchSettings { horizon: 120, replications: 8, thresholds: Thresholds::default() }
    }

    #[test]
    fn zero_budget_gives_an_empty_report() {
        let f = family(json!({"kind": "gaussian-entries", "dim": 2, "entry_std": [0.5, 2.0]}));
        let r = search_open_problem(f.as_ref(), 0, 1, &quick()).unwrap();
        assert!(r.candidates.is_empty() && r.evaluations.is_empty());
        assert_eq!(r.label, SEARCH_LABEL);
    }

    #[test]
    fn bounded_terms_example_is_not_a_candidate() {
        let f = family(json!({"kind": "gallery", "id": "E34"}));
        let r = search_open_problem(f.as_ref(), 5, 1, &quick()).unwrap();
        assert_eq!(r.evaluations.len(), 1);
        assert_eq!(r.evaluations[0].v, Some(Verdict::Holds));
        assert!(r.candidates.is_empty());
    }

    #[test]
    fn contracting_single_law_is_rejected() {
        let f = family(json!({
            "kind": "fixed",
            "law": {"kind": "constant", "matrix": [[0.5, 0.0], [0.0, 0.25]], "z": [1.0, 1.0]}
        }));
        assert!(matches!(search_open_problem(f.as_ref(), 3, 1, &quick()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn frame_family_produces_a_deterministic_report() {
        let f = family(json!({"kind": "frame-diagonal", "dim": 2, "random_frame": true}));
        let a = search_open_problem(f.as_ref(), 6, 4, &quick()).unwrap();
        let b = search_open_problem(f.as_ref(), 6, 4, &quick()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.admitted + a.rejected, 6);
        assert!(a.candidates.windows(2).all(|w| w[0].margin >= w[1].margin));
        assert!(a.candidates.iter().all(|c| c.admitted && c.vi == Some(Verdict::Holds) && c.v == Some(Verdict::Fails)));
    }

    #[test]
    fn unknown_family_kinds_are_config_errors() {
        let err = FamilyRegistry::with_builtins().parse(&json!({"kind": "nope"})).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(FamilyRegistry::with_builtins()
            .parse(&json!({"kind": "frame-diagonal", "dim": 2, "bogus": 1}))
            .is_err());
    }
}
