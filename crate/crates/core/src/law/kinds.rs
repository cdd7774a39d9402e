use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{check_weights, field, optional_field, LawRegistry, PairLaw, SharedLaw, VectorLaw, FRAME_TOL};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{SquareMatrix, Vector};
use crate::rng::RngStream;

/// Always returns the same pair `(M, z)`.
#[derive(Clone, Debug)]
pub struct Constant {
    m: SquareMatrix,
    z: Vector,
}

impl Constant {
    pub fn new(m: SquareMatrix, z: Vector) -> Result<Self> {
        check_dim(m.dim(), z.dim())?;
        Ok(Self { m, z })
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.m
    }

    pub fn z(&self) -> &Vector {
        &self.z
    }
}

impl PairLaw for Constant {
    fn kind(&self) -> &'static str {
        "constant"
    }

    fn dim(&self) -> usize {
        self.m.dim()
    }

    fn sample(&self, _rng: &mut RngStream) -> (SquareMatrix, Vector) {
        (self.m.clone(), self.z.clone())
    }

    fn to_json(&self) -> Value {
        json!({"kind": "constant", "matrix": self.m, "z": self.z})
    }

    fn is_degenerate(&self) -> bool {
        true
    }
}

pub fn law_constant(m: SquareMatrix, z: Vector) -> Result<SharedLaw> {
    Ok(Arc::new(Constant::new(m, z)?))
}

/// A scalar law with finitely many atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteScalar {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl FiniteScalar {
    pub fn point(value: f64) -> Self {
        Self { values: vec![value], probs: vec![1.0] }
    }

    fn validate(&self) -> Result<()> {
        check_dim(self.values.len(), self.probs.len())?;
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite scalar atom {v}")));
        }
        check_weights(&self.probs)
    }

    fn is_degenerate(&self) -> bool {
        let support: Vec<f64> =
            self.values.iter().zip(&self.probs).filter(|(_, p)| **p > 0.0).map(|(v, _)| *v).collect();
        support.windows(2).all(|w| w[0] == w[1])
    }
}

/// Law of the frame coefficients `(a_1, …, a_d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarLaw {
    /// One tuple drawn from a finite list; lets coordinates depend on each other.
    Coupled { tuples: Vec<Vec<f64>>, weights: Vec<f64> },
    /// Each coordinate drawn from its own law, independently.
    Independent(Vec<FiniteScalar>),
}

impl ScalarLaw {
    /// Every coordinate fixed.
    pub fn constant(values: &[f64]) -> Self {
        ScalarLaw::Coupled { tuples: vec![values.to_vec()], weights: vec![1.0] }
    }

    pub fn dim(&self) -> usize {
        match self {
            ScalarLaw::Coupled { tuples, .. } => tuples.first().map_or(0, Vec::len),
            ScalarLaw::Independent(laws) => laws.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ScalarLaw::Coupled { tuples, weights } => {
                if tuples.is_empty() {
                    return Err(Error::InvalidInput("coupled scalar law needs at least one tuple".into()));
                }
                check_dim(tuples.len(), weights.len())?;
                let d = tuples[0].len();
                for t in tuples {
                    check_dim(d, t.len())?;
                    if let Some(v) = t.iter().find(|v| !v.is_finite()) {
                        return Err(Error::InvalidInput(format!("non-finite scalar atom {v}")));
                    }
                }
                check_weights(weights)
            }
            ScalarLaw::Independent(laws) => laws.iter().try_for_each(FiniteScalar::validate),
        }
    }

    fn is_degenerate(&self) -> bool {
        match self {
            ScalarLaw::Coupled { tuples, weights } => {
                let support: Vec<&Vec<f64>> =
                    tuples.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(t, _)| t).collect();
                support.windows(2).all(|w| w[0] == w[1])
            }
            ScalarLaw::Independent(laws) => laws.iter().all(FiniteScalar::is_degenerate),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        match self {
            ScalarLaw::Coupled { tuples, weights } => tuples[rng.categorical(weights)].clone(),
            ScalarLaw::Independent(laws) => laws.iter().map(|l| l.values[rng.categorical(&l.probs)]).collect(),
        }
    }
}

/// `M = Σ a_i v_i v_iᵀ` for a fixed orthonormal frame and random coefficients,
/// with `Z` drawn independently.
#[derive(Clone, Debug)]
pub struct FrameDiagonal {
    frame: Vec<Vector>,
    scalars: ScalarLaw,
    z: VectorLaw,
    projectors: Vec<SquareMatrix>,
}

impl FrameDiagonal {
    pub fn new(frame: Vec<Vector>, scalars: ScalarLaw, z: VectorLaw) -> Result<Self> {
        let d = frame.len();
        if d == 0 {
            return Err(Error::Frame("empty frame".into()));
        }
        for v in &frame {
            check_dim(d, v.dim())?;
        }
        for i in 0..d {
            for j in i..d {
                let g = frame[i].dot(&frame[j])?;
                let want = if i == j { 1.0 } else { 0.0 };
                if (g - want).abs() > FRAME_TOL {
                    return Err(Error::Frame(format!("<v{}, v{}> = {g}", i + 1, j + 1)));
                }
            }
        }
        scalars.validate()?;
        check_dim(d, scalars.dim())?;
        z.validate()?;
        check_dim(d, z.dim())?;
        let projectors = frame.iter().map(|v| SquareMatrix::outer(v, v)).collect::<Result<_>>()?;
        Ok(Self { frame, scalars, z, projectors })
    }

    /// The standard basis `e_1, …, e_d`.
    pub fn standard_frame(d: usize) -> Result<Vec<Vector>> {
        (0..d).map(|i| Vector::unit(d, i)).collect()
    }

    pub fn frame(&self) -> &[Vector] {
        &self.frame
    }

    pub fn scalars(&self) -> &ScalarLaw {
        &self.scalars
    }

    /// `Σ a_i v_i v_iᵀ`
    pub fn matrix_for(&self, a: &[f64]) -> SquareMatrix {
        let d = self.frame.len();
        let mut data = vec![0.0; d * d];
        for (ai, p) in a.iter().zip(&self.projectors) {
            if *ai == 0.0 {
                continue;
            }
            for (x, y) in data.iter_mut().zip(p.as_slice()) {
                if *y != 0.0 {
                    *x += ai * y;
                }
            }
        }
        SquareMatrix::from_raw_unchecked(d, data)
    }
}

impl PairLaw for FrameDiagonal {
    fn kind(&self) -> &'static str {
        "frame-diagonal"
    }

    fn dim(&self) -> usize {
        self.frame.len()
    }

    fn sample(&self, rng: &mut RngStream) -> (SquareMatrix, Vector) {
        let a = self.scalars.sample(rng);
        let m = self.matrix_for(&a);
        (m, self.z.sample(rng))
    }

    fn to_json(&self) -> Value {
        json!({"kind": "frame-diagonal", "frame": self.frame, "scalars": self.scalars, "z": self.z})
    }

    fn is_degenerate(&self) -> bool {
        self.scalars.is_degenerate() && self.z.is_degenerate()
    }
}

pub fn law_frame_diagonal(frame: Vec<Vector>, scalars: ScalarLaw, z: VectorLaw) -> Result<SharedLaw> {
    Ok(Arc::new(FrameDiagonal::new(frame, scalars, z)?))
}

/// Picks a component law with the given weights, then draws from it.
#[derive(Clone, Debug)]
pub struct FiniteMixture {
    weights: Vec<f64>,
    components: Vec<SharedLaw>,
}

impl FiniteMixture {
    pub fn new(weights: Vec<f64>, components: Vec<SharedLaw>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("mixture needs at least one component".into()));
        }
        check_dim(components.len(), weights.len())?;
        check_weights(&weights)?;
        let d = components[0].dim();
        for c in &components {
            check_dim(d, c.dim())?;
        }
        Ok(Self { weights, components })
    }
}

impl PairLaw for FiniteMixture {
    fn kind(&self) -> &'static str {
        "finite-mixture"
    }

    fn dim(&self) -> usize {
        self.components[0].dim()
    }

    fn sample(&self, rng: &mut RngStream) -> (SquareMatrix, Vector) {
        let k = rng.categorical(&self.weights);
        self.components[k].sample(rng)
    }

    fn to_json(&self) -> Value {
        let components: Vec<Value> = self.components.iter().map(|c| c.to_json()).collect();
        json!({"kind": "finite-mixture", "weights": self.weights, "components": components})
    }

    fn is_degenerate(&self) -> bool {
        let live: Vec<&SharedLaw> =
            self.components.iter().zip(&self.weights).filter(|(_, w)| **w > 0.0).map(|(c, _)| c).collect();
        live.len() == 1 && live[0].is_degenerate()
    }
}

/// `M` with i.i.d. `N(0, entry_std²)` entries and `Z` with i.i.d. `N(0, z_std²)`
/// coordinates, independent of each other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianEntries {
    pub dim: usize,
    pub entry_std: f64,
    pub z_std: f64,
}

impl GaussianEntries {
    pub fn new(dim: usize, entry_std: f64, z_std: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        for (name, s) in [("entry_std", entry_std), ("z_std", z_std)] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be finite and >= 0, got {s}")));
            }
        }
        Ok(Self { dim, entry_std, z_std })
    }
}

impl PairLaw for GaussianEntries {
    fn kind(&self) -> &'static str {
        "gaussian-entries"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, rng: &mut RngStream) -> (SquareMatrix, Vector) {
        let d = self.dim;
        let m = if self.entry_std == 0.0 {
            vec![0.0; d * d]
        } else {
            (0..d * d).map(|_| self.entry_std * rng.standard_normal()).collect()
        };
        let z = if self.z_std == 0.0 {
            vec![0.0; d]
        } else {
            (0..d).map(|_| self.z_std * rng.standard_normal()).collect()
        };
        (SquareMatrix::from_raw_unchecked(d, m), Vector::from_raw_unchecked(z))
    }

    fn to_json(&self) -> Value {
        json!({"kind": "gaussian-entries", "dim": self.dim, "entry_std": self.entry_std, "z_std": self.z_std})
    }

    fn is_degenerate(&self) -> bool {
        self.entry_std == 0.0 && self.z_std == 0.0
    }
}

pub fn law_gaussian_entries(d: usize, entry_std: f64, z_std: f64) -> Result<SharedLaw> {
    Ok(Arc::new(GaussianEntries::new(d, entry_std, z_std)?))
}

/// Takes `M` from one pair law and draws `Z` independently from a vector law.
#[derive(Clone, Debug)]
pub struct Composite {
    m: SharedLaw,
    z: VectorLaw,
}

impl Composite {
    pub fn new(m: SharedLaw, z: VectorLaw) -> Result<Self> {
        z.validate()?;
        check_dim(m.dim(), z.dim())?;
        Ok(Self { m, z })
    }
}

impl PairLaw for Composite {
    fn kind(&self) -> &'static str {
        "composite"
    }

    fn dim(&self) -> usize {
        self.m.dim()
    }

    fn sample(&self, rng: &mut RngStream) -> (SquareMatrix, Vector) {
        let (m, _) = self.m.sample(rng);
        (m, self.z.sample(rng))
    }

    fn to_json(&self) -> Value {
        json!({"kind": "composite", "m": self.m.to_json(), "z": self.z})
    }

    fn is_degenerate(&self) -> bool {
        self.m.is_degenerate() && self.z.is_degenerate()
    }
}

fn check_keys(doc: &Value, allowed: &[&str]) -> Result<()> {
    if let Some(obj) = doc.as_object() {
        for key in obj.keys() {
            if key != "kind" && !allowed.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown field {key:?}; expected one of {allowed:?}")));
            }
        }
    }
    Ok(())
}

pub(super) fn parse_constant(doc: &Value, _: &LawRegistry) -> Result<SharedLaw> {
    check_keys(doc, &["matrix", "z"])?;
    let m: SquareMatrix = field(doc, "matrix")?;
    let z: Option<Vector> = optional_field(doc, "z")?;
    let z = match z {
        Some(z) => z,
        None => Vector::zeros(m.dim())?,
    };
    law_constant(m, z)
}

pub(super) fn parse_frame_diagonal(doc: &Value, _: &LawRegistry) -> Result<SharedLaw> {
    check_keys(doc, &["frame", "scalars", "z"])?;
    let scalars: ScalarLaw = field(doc, "scalars")?;
    let frame = match optional_field::<Vec<Vector>>(doc, "frame")? {
        Some(f) => f,
        None => FrameDiagonal::standard_frame(scalars.dim())?,
    };
    let z = match optional_field::<VectorLaw>(doc, "z")? {
        Some(z) => z,
        None => VectorLaw::zero(frame.len())?,
    };
    law_frame_diagonal(frame, scalars, z)
}

pub(super) fn parse_finite_mixture(doc: &Value, registry: &LawRegistry) -> Result<SharedLaw> {
    check_keys(doc, &["weights", "components"])?;
    let weights: Vec<f64> = field(doc, "weights")?;
    let components: Vec<Value> = field(doc, "components")?;
    let components = components.iter().map(|c| registry.parse(c)).collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(FiniteMixture::new(weights, components)?))
}

pub(super) fn parse_gaussian_entries(doc: &Value, _: &LawRegistry) -> Result<SharedLaw> {
    check_keys(doc, &["dim", "entry_std", "z_std"])?;
    let dim: usize = field(doc, "dim")?;
    let entry_std: f64 = field(doc, "entry_std")?;
    let z_std: f64 = optional_field(doc, "z_std")?.unwrap_or(0.0);
    law_gaussian_entries(dim, entry_std, z_std)
}

pub(super) fn parse_composite(doc: &Value, registry: &LawRegistry) -> Result<SharedLaw> {
    check_keys(doc, &["m", "z"])?;
    let m = registry.parse(doc.get("m").ok_or_else(|| Error::Config("composite law needs \"m\"".into()))?)?;
    let z: VectorLaw = field(doc, "z")?;
    Ok(Arc::new(Composite::new(m, z)?))
}
