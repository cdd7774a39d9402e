//! Joint laws of the i.i.d. pairs `(M_t, Z_t)` and laws of `Z_0`.
//!
//! Every pair law implements [`PairLaw`] and is shared as an
//! `Arc<dyn PairLaw>`. Laws are described in JSON by a `kind` tag plus
//! kind-specific parameters; [`LawRegistry`] maps each tag to its parser, so
//! new kinds can be registered without touching the callers:
//!
//! ```json
//! {"kind": "constant", "matrix": [[0.5, 0], [0, 0.25]], "z": [1, 1]}
//! {"kind": "gaussian-entries", "dim": 2, "entry_std": 0.3, "z_std": 1.0}
//! {"kind": "frame-diagonal",
//!  "frame": [[1, 0], [0, 1]],
//!  "scalars": {"coupled": {"tuples": [[1, 0.5], [0.5, 1]], "weights": [0.5, 0.5]}},
//!  "z": {"kind": "constant", "value": [1, 1]}}
//! {"kind": "finite-mixture", "weights": [0.5, 0.5], "components": [{...}, {...}]}
//! {"kind": "composite", "m": {...pair law...}, "z": {...vector law...}}
//! ```

mod kinds;
mod vector;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{SquareMatrix, Vector};
use crate::rng::RngStream;

pub use kinds::{
    law_constant, law_frame_diagonal, law_gaussian_entries, Composite, Constant, FiniteMixture, FiniteScalar,
    FrameDiagonal, GaussianEntries, ScalarLaw,
};
pub use vector::VectorLaw;

/// Tolerance on probability vectors summing to one.
pub const WEIGHT_TOL: f64 = 1e-12;
/// Tolerance on frame orthonormality.
pub const FRAME_TOL: f64 = 1e-10;

/// A sampler of i.i.d. pairs `(M_t, Z_t)`.
pub trait PairLaw: fmt::Debug + Send + Sync {
    /// The JSON `kind` tag this law is registered under.
    fn kind(&self) -> &'static str;

    fn dim(&self) -> usize;

    /// One draw; advances `rng` deterministically.
    fn sample(&self, rng: &mut RngStream) -> (SquareMatrix, Vector);

    /// JSON description that [`LawRegistry::parse`] maps back to an equal law.
    fn to_json(&self) -> Value;

    /// True when every draw is the same pair.
    fn is_degenerate(&self) -> bool {
        false
    }
}

pub type SharedLaw = Arc<dyn PairLaw>;

/// Draws one pair; free-function form of [`PairLaw::sample`].
pub fn sample(law: &dyn PairLaw, rng: &mut RngStream) -> (SquareMatrix, Vector) {
    law.sample(rng)
}

pub type LawParser = fn(&Value, &LawRegistry) -> Result<SharedLaw>;

/// Parsers for pair-law kinds, keyed by their JSON tag.
#[derive(Clone)]
pub struct LawRegistry {
    parsers: BTreeMap<&'static str, LawParser>,
}

impl LawRegistry {
    pub fn empty() -> Self {
        Self { parsers: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("constant", kinds::parse_constant);
        r.register("frame-diagonal", kinds::parse_frame_diagonal);
        r.register("finite-mixture", kinds::parse_finite_mixture);
        r.register("gaussian-entries", kinds::parse_gaussian_entries);
        r.register("composite", kinds::parse_composite);
        r
    }

    pub fn register(&mut self, kind: &'static str, parser: LawParser) {
        self.parsers.insert(kind, parser);
    }

    pub fn kinds(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.parsers.keys().copied()
    }

    pub fn parse(&self, doc: &Value) -> Result<SharedLaw> {
        let kind = doc
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Config("law document needs a string \"kind\" field".into()))?;
        let parser = self.parsers.get(kind).ok_or_else(|| {
            let known: Vec<_> = self.kinds().collect();
            Error::Config(format!("unknown law kind {kind:?}; known kinds: {known:?}"))
        })?;
        parser(doc, self)
    }
}

impl Default for LawRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl fmt::Debug for LawRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.parsers.keys()).finish()
    }
}

/// Parses a pair law with the built-in registry.
pub fn parse_law(doc: &Value) -> Result<SharedLaw> {
    LawRegistry::with_builtins().parse(doc)
}

/// A pair law together with the law of `Z_0`.
///
/// Accepts either a bare pair-law document, or `{"law": {...}, "z0": {...}}`.
/// A missing `z0` means `Z_0 = 0`.
#[derive(Clone, Debug)]
pub struct LawDocument {
    pub law: SharedLaw,
    pub z0: VectorLaw,
}

impl LawDocument {
    pub fn parse(doc: &Value, registry: &LawRegistry) -> Result<Self> {
        let (law_doc, z0_doc) = match doc.get("law") {
            Some(inner) => (inner, doc.get("z0")),
            None => (doc, None),
        };
        let law = registry.parse(law_doc)?;
        let z0 = match z0_doc {
            Some(v) => {
                let z0: VectorLaw = serde_json::from_value(v.clone())
                    .map_err(|e| Error::Config(format!("bad z0 law: {e}")))?;
                z0.validate()?;
                crate::error::check_dim(law.dim(), z0.dim())?;
                z0
            }
            None => VectorLaw::zero(law.dim())?,
        };
        Ok(Self { law, z0 })
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({ "law": self.law.to_json(), "z0": self.z0 })
    }
}

pub(crate) fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidInput("empty probability vector".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidInput(format!("probabilities must be nonnegative, got {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidInput(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

pub(crate) fn field<T: serde::de::DeserializeOwned>(doc: &Value, name: &str) -> Result<T> {
    let v = doc.get(name).ok_or_else(|| Error::Config(format!("law is missing field {name:?}")))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("bad field {name:?}: {e}")))
}

pub(crate) fn optional_field<T: serde::de::DeserializeOwned>(doc: &Value, name: &str) -> Result<Option<T>> {
    match doc.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(_) => field(doc, name).map(Some),
    }
}
