//! Suffix-minimum statistics over a realised history `M_1, …, M_{t-1}`:
//!
//! * `Y_t = min_{k<t} |M_k M_{k+1} ⋯ M_{t-1} z|`
//! * `U_t = min_{k<t} ‖M_k M_{k+1} ⋯ M_{t-1}‖`
//!
//! Both are returned as natural logarithms. An empty history gives `+inf`
//! (the minimum over an empty set).

use super::matrix::{SquareMatrix, Vector};
use super::scaled::{ScaledProduct, ScaledVec};
use crate::error::{check_dim, Error, Result};

/// Default cap on the history length for the quadratic-cost statistics.
pub const DEFAULT_T_MAX: usize = 5000;

/// `log Y_t` by the backward recursion `w ← M_k w`, starting from `w = z`.
pub fn suffix_min_term(history: &[SquareMatrix], z: &Vector) -> Result<f64> {
    let mut w = ScaledVec::new(z);
    let mut best = f64::INFINITY;
    for m in history.iter().rev() {
        check_dim(z.dim(), m.dim())?;
        w = w.left_mul(m)?;
        best = best.min(w.log_norm());
    }
    Ok(best)
}

/// `log U_t`, recomputing every suffix product from scratch.
pub fn suffix_min_norm(history: &[SquareMatrix]) -> Result<f64> {
    let Some(first) = history.first() else {
        return Ok(f64::INFINITY);
    };
    let mut tracker = SuffixNormTracker::with_cap(first.dim(), history.len())?;
    for m in history {
        tracker.push(m)?;
    }
    Ok(tracker.min_log_norm())
}

/// Incrementally maintained suffix products `M_k ⋯ M_{t-1}` for all `k`.
///
/// Each `push` right-multiplies every stored suffix, so a full run of
/// length `T` costs `O(T² d³)`.
#[derive(Clone, Debug)]
pub struct SuffixNormTracker {
    dim: usize,
    cap: usize,
    suffixes: Vec<ScaledProduct>,
}

impl SuffixNormTracker {
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_cap(dim, DEFAULT_T_MAX)
    }

    pub fn with_cap(dim: usize, cap: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        Ok(Self { dim, cap, suffixes: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.suffixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.suffixes.is_empty()
    }

    pub fn push(&mut self, m: &SquareMatrix) -> Result<()> {
        check_dim(self.dim, m.dim())?;
        if self.suffixes.len() >= self.cap {
            return Err(Error::Config(format!(
                "suffix statistics capped at a history of {} matrices",
                self.cap
            )));
        }
        for s in &mut self.suffixes {
            s.extend_in_place(m)?;
        }
        self.suffixes.push(ScaledProduct::identity(self.dim)?.extend(m)?);
        Ok(())
    }

    /// `log U_t` for the history pushed so far.
    pub fn min_log_norm(&self) -> f64 {
        self.suffixes.iter().map(ScaledProduct::log_norm).fold(f64::INFINITY, f64::min)
    }
}
