//! Fixtures with closed-form oracles: the non-C0 separations (`E31`–`E34`)
//! and the mixture law `R34` where C0 holds but `Π‖M_j‖ ≡ 1`.
//!
//! All two-dimensional fixtures live on an orthonormal frame `v₁, v₂`
//! (standard basis by default) and are built as frame-diagonal laws.

mod search;
mod verify;

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::diagnostics::{Condition, Verdict};
use crate::error::{Error, Result};
use crate::law::{law_frame_diagonal, ScalarLaw, SharedLaw, VectorLaw};
use crate::linalg::{spectral_norm, LogScale, SquareMatrix, Vector};

pub use search::{
    search_open_problem, Evaluation, FamilyRegistry, LawFamily, SearchReport, SearchSettings, SEARCH_LABEL,
};
pub use verify::{verify, LyapunovCheck, OracleCheck, VerdictCheck, VerdictStatus, VerifyReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GalleryId {
    E31,
    E32,
    E33,
    E34,
    R34,
}

impl GalleryId {
    pub const ALL: [GalleryId; 5] = [GalleryId::E31, GalleryId::E32, GalleryId::E33, GalleryId::E34, GalleryId::R34];

    pub fn as_str(self) -> &'static str {
        match self {
            GalleryId::E31 => "E31",
            GalleryId::E32 => "E32",
            GalleryId::E33 => "E33",
            GalleryId::E34 => "E34",
            GalleryId::R34 => "R34",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            GalleryId::E31 => "M = αv₁v₁ᵀ + v₂v₂ᵀ, Z = v₁: summable terms without C0",
            GalleryId::E32 => "M = αv₁v₁ᵀ + βv₂v₂ᵀ, Z = v₁, Z₀ = v₂: summable terms, X diverges",
            GalleryId::E33 => "d = 1, M = β, Z = (1−β)c, Z₀ = c: X constant, terms grow",
            GalleryId::E34 => "M = αv₁v₁ᵀ + v₂v₂ᵀ, Z = v₂: bounded terms, Y does not vanish",
            GalleryId::R34 => "M = a v₁v₁ᵀ + (3/2 − a)v₂v₂ᵀ, a ∈ {1, ½}: C0 with Π‖M_j‖ = 1",
        }
    }
}

impl fmt::Display for GalleryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GalleryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GalleryId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown gallery entry {s:?}; known: E31, E32, E33, E34, R34")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GalleryParams {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl Default for GalleryParams {
    fn default() -> Self {
        Self { alpha: 0.5, beta: 2.0, c: 1.0, v1: vec![1.0, 0.0], v2: vec![0.0, 1.0] }
    }
}

fn is_power_of_two(x: f64) -> bool {
    x.is_normal() && x.abs().to_bits() & ((1u64 << 52) - 1) == 0
}

/// Closed-form values at one step; `None` where the entry has no oracle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleStep {
    pub t: usize,
    /// `log‖M_1⋯M_t‖`
    pub prod_norm_log: f64,
    /// `log|W_t|`
    pub w_term_log: f64,
    /// `log Y_t` (`+inf` at `t = 1`)
    pub y_log: f64,
    /// `Σ_{j≤t} log‖M_j‖`
    pub norm_product_log: f64,
    /// `|X_t|` where it is deterministic.
    pub x_norm: Option<f64>,
}

/// A fixture: its law, the law of `Z_0`, oracles and the expected verdicts.
#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub id: GalleryId,
    pub params: GalleryParams,
    pub law: SharedLaw,
    pub z0: VectorLaw,
    pub expected: BTreeMap<Condition, Verdict>,
}

/// Builds an entry, checking the parameter ranges each construction needs.
pub fn build(id: GalleryId, params: GalleryParams) -> Result<GalleryEntry> {
    let GalleryParams { alpha, beta, c, .. } = params;
    let finite = [alpha, beta, c].iter().all(|x| x.is_finite());
    let bad = |msg: &str| Err(Error::InvalidInput(format!("{id}: {msg}")));
    match id {
        GalleryId::E31 | GalleryId::E34 if !(finite && 0.0 < alpha && alpha < 1.0) => return bad("needs 0 < α < 1"),
        GalleryId::E32 if !(finite && 0.0 < alpha && alpha < 1.0 && 1.0 < beta) => return bad("needs 0 < α < 1 < β"),
        GalleryId::E33 if !(finite && beta.abs() > 1.0 && c > 0.0) => return bad("needs |β| > 1 and c > 0"),
        _ => {}
    }
    let frame = || -> Result<Vec<Vector>> { Ok(vec![Vector::new(params.v1.clone())?, Vector::new(params.v2.clone())?]) };
    let vec2 = |a: f64, b: f64| -> Result<Vector> {
        Vector::new(params.v1.iter().zip(&params.v2).map(|(x, y)| a * x + b * y).collect())
    };
    use Condition::*;
    use Verdict::*;
    let (law, z0, expected) = match id {
        GalleryId::E31 => (
            law_frame_diagonal(frame()?, ScalarLaw::constant(&[alpha, 1.0]), VectorLaw::constant(vec2(1.0, 0.0)?))?,
            VectorLaw::zero(2)?,
            vec![(Ii, Holds), (C0, Fails)],
        ),
        GalleryId::E32 => (
            law_frame_diagonal(frame()?, ScalarLaw::constant(&[alpha, beta]), VectorLaw::constant(vec2(1.0, 0.0)?))?,
            VectorLaw::constant(vec2(0.0, 1.0)?),
            vec![(Ii, Holds), (I, Fails), (C0, Fails)],
        ),
        GalleryId::E33 => (
            law_frame_diagonal(
                vec![Vector::new(vec![1.0])?],
                ScalarLaw::constant(&[beta]),
                VectorLaw::constant(Vector::new(vec![(1.0 - beta) * c])?),
            )?,
            VectorLaw::constant(Vector::new(vec![c])?),
            vec![(I, Holds), (V, Fails), (Vi, Fails), (C0, Fails)],
        ),
        GalleryId::E34 => (
            law_frame_diagonal(frame()?, ScalarLaw::constant(&[alpha, 1.0]), VectorLaw::constant(vec2(0.0, 1.0)?))?,
            VectorLaw::zero(2)?,
            vec![(V, Holds), (Vi, Fails), (C0, Fails)],
        ),
        GalleryId::R34 => (
            law_frame_diagonal(
                frame()?,
                ScalarLaw::Coupled { tuples: vec![vec![1.0, 0.5], vec![0.5, 1.0]], weights: vec![0.5, 0.5] },
                VectorLaw::constant(vec2(1.0, 1.0)?),
            )?,
            VectorLaw::zero(2)?,
            vec![(C0, Holds)],
        ),
    };
    Ok(GalleryEntry { id, params, law, z0, expected: expected.into_iter().collect() })
}

/// [`build`] with the default parameters.
pub fn build_default(id: GalleryId) -> Result<GalleryEntry> {
    build(id, GalleryParams::default())
}

/// `−log 2 · min(a, b) + ½ log(1 + 4^{−|a−b|})`, i.e. `log|(2^{−a}, 2^{−b})|`.
fn log_dyadic_pair(a: usize, b: usize) -> f64 {
    let (lo, hi) = (a.min(b), a.max(b));
    let head = -(lo as f64) * LN_2;
    if hi - lo > 600 {
        head
    } else {
        head + 0.5 * (4f64.powi(-((hi - lo) as i32))).ln_1p()
    }
}

impl GalleryEntry {
    pub fn dim(&self) -> usize {
        self.law.dim()
    }

    /// Parameters the construction actually uses.
    pub fn relevant_params(&self) -> Value {
        let p = &self.params;
        match self.id {
            GalleryId::E31 | GalleryId::E34 => json!({"alpha": p.alpha, "v1": p.v1, "v2": p.v2}),
            GalleryId::E32 => json!({"alpha": p.alpha, "beta": p.beta, "v1": p.v1, "v2": p.v2}),
            GalleryId::E33 => json!({"beta": p.beta, "c": p.c}),
            GalleryId::R34 => json!({"v1": p.v1, "v2": p.v2}),
        }
    }

    /// True when the oracles are expected to match to the last bit: every
    /// parameter is a signed power of two and the frame is the standard basis.
    pub fn is_dyadic(&self) -> bool {
        let p = &self.params;
        let standard = p.v1 == [1.0, 0.0] && p.v2 == [0.0, 1.0];
        match self.id {
            GalleryId::E31 | GalleryId::E34 => standard && is_power_of_two(p.alpha),
            GalleryId::E32 => standard && is_power_of_two(p.alpha) && is_power_of_two(p.beta),
            GalleryId::E33 => is_power_of_two(p.beta) && is_power_of_two(p.c) && is_power_of_two(1.0 - p.beta),
            GalleryId::R34 => standard,
        }
    }

    /// The value of `λ = lim log‖M_1⋯M_t‖ / t`.
    pub fn lyapunov_oracle(&self) -> f64 {
        let p = &self.params;
        match self.id {
            GalleryId::E31 | GalleryId::E34 => 0.0,
            GalleryId::E32 => p.beta.ln(),
            GalleryId::E33 => p.beta.abs().ln(),
            GalleryId::R34 => -LN_2 / 2.0,
        }
    }

    /// Closed forms along a realised path. Only `R34` looks at the draws:
    /// it needs the count `K_t` of steps with coefficient 1 on `v₁`.
    pub fn oracle_path(&self, draws: &[(SquareMatrix, Vector)]) -> Vec<OracleStep> {
        let p = &self.params;
        let ln_a = p.alpha.ln();
        let ln_b = p.beta.abs().ln();
        match self.id {
            GalleryId::R34 => {
                let v1 = &p.v1;
                let ones: Vec<bool> = draws
                    .iter()
                    .map(|(m, _)| {
                        let a: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| v1[i] * m.get(i, j) * v1[j]).sum();
                        a > 0.75
                    })
                    .collect();
                // prefix[t] = K_t
                let mut prefix = vec![0usize; ones.len() + 1];
                for (t, one) in ones.iter().enumerate() {
                    prefix[t + 1] = prefix[t] + usize::from(*one);
                }
                (1..=draws.len())
                    .map(|t| {
                        let k = prefix[t];
                        let km = prefix[t - 1];
                        let y_log = (1..t)
                            .map(|start| {
                                let len = t - start;
                                let a = prefix[t - 1] - prefix[start - 1];
                                log_dyadic_pair(len - a, a)
                            })
                            .fold(f64::INFINITY, f64::min);
                        OracleStep {
                            t,
                            prod_norm_log: -(k.min(t - k) as f64) * LN_2 + 0.0,
                            w_term_log: log_dyadic_pair(t - 1 - km, km),
                            y_log,
                            norm_product_log: 0.0,
                            x_norm: None,
                        }
                    })
                    .collect()
            }
            id => (1..=draws.len())
                .map(|t| {
                    let tf = t as f64;
                    let first = t == 1;
                    let (prod, w, y, np, x) = match id {
                        GalleryId::E31 => (0.0, (tf - 1.0) * ln_a, (tf - 1.0) * ln_a, 0.0, None),
                        GalleryId::E32 => (tf * ln_b, (tf - 1.0) * ln_a, (tf - 1.0) * ln_a, tf * ln_b, None),
                        GalleryId::E33 => {
                            let lz = ((1.0 - p.beta).abs() * p.c).ln();
                            (tf * ln_b, lz + (tf - 1.0) * ln_b, lz + ln_b, tf * ln_b, Some(p.c))
                        }
                        _ => (0.0, 0.0, 0.0, 0.0, None),
                    };
                    // `+ 0.0` maps the -0 of `0 · ln α` to +0, as `ln 1` gives
                    OracleStep {
                        t,
                        prod_norm_log: prod + 0.0,
                        w_term_log: w + 0.0,
                        y_log: if first { f64::INFINITY } else { y + 0.0 },
                        norm_product_log: np,
                        x_norm: x,
                    }
                })
                .collect(),
        }
    }

    pub fn summary(&self) -> Value {
        json!({
            "id": self.id,
            "description": self.id.description(),
            "dim": self.dim(),
            "params": self.relevant_params(),
            "law": self.law.to_json(),
            "z0": self.z0,
            "expected_verdicts": self.expected,
        })
    }
}

/// `Σ_{j≤t} log‖M_j‖` along the draws, with exact power-of-two bookkeeping.
pub fn norm_product_logs(draws: &[(SquareMatrix, Vector)]) -> Vec<f64> {
    let mut acc = LogScale::ONE;
    draws
        .iter()
        .map(|(m, _)| {
            acc = acc.combine(LogScale::of(spectral_norm(m)));
            acc.value()
        })
        .collect()
}

/// Every entry with default parameters, in id order.
pub fn list() -> Result<Vec<GalleryEntry>> {
    GalleryId::ALL.into_iter().map(build_default).collect()
}
