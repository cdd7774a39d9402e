use std::cmp::Ordering;
use std::f64::consts::LN_2;

use serde::Serialize;

use super::matrix::{euclidean_norm, ldexp, mul_raw, mul_vec_raw, split_pow2, SquareMatrix, Vector};
use super::norm::spectral_norm_raw;
use crate::error::{check_dim, Result};

/// Natural logarithm of a nonnegative magnitude, kept as `exp2 · ln 2 + rest`.
///
/// Renormalisation factors are split into a power of two and a mantissa in
/// `[1, 2)`, and only the mantissa's logarithm is ever rounded. Products of
/// dyadic matrices therefore carry their log-scale exactly, and `value()` is
/// bit-identical to `k as f64 * LN_2` whenever the magnitude is `2^k`.
/// The zero magnitude is an absorbing state with value `-inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogScale {
    exp2: i64,
    rest: f64,
    zero: bool,
}

impl LogScale {
    /// `log 1 = 0`
    pub const ONE: LogScale = LogScale { exp2: 0, rest: 0.0, zero: false };
    /// `log 0 = -inf`
    pub const ZERO: LogScale = LogScale { exp2: 0, rest: 0.0, zero: true };

    /// Log of a nonnegative finite magnitude.
    pub fn of(magnitude: f64) -> LogScale {
        debug_assert!(magnitude >= 0.0 && magnitude.is_finite(), "bad magnitude {magnitude}");
        if magnitude == 0.0 {
            return Self::ZERO;
        }
        let (exp2, mantissa) = split_pow2(magnitude);
        LogScale { exp2, rest: mantissa.ln(), zero: false }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Log of the product of the two magnitudes.
    pub fn combine(self, other: LogScale) -> LogScale {
        if self.zero || other.zero {
            return Self::ZERO;
        }
        LogScale { exp2: self.exp2 + other.exp2, rest: self.rest + other.rest, zero: false }
    }

    /// The logarithm as an extended real.
    pub fn value(&self) -> f64 {
        if self.zero {
            f64::NEG_INFINITY
        } else if self.rest == 0.0 {
            self.exp2 as f64 * LN_2
        } else {
            self.exp2 as f64 * LN_2 + self.rest
        }
    }

    /// `value() / steps`, dividing the power-of-two part exactly first.
    pub fn per_step(&self, steps: u64) -> f64 {
        if self.zero {
            return f64::NEG_INFINITY;
        }
        let n = steps as f64;
        let pow = (self.exp2 as f64 / n) * LN_2;
        if self.rest == 0.0 {
            pow
        } else {
            pow + self.rest / n
        }
    }

    /// The magnitude itself, `exp(value())`; may overflow to `inf` or underflow to `0`.
    pub fn factor(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            ldexp(self.rest.exp(), self.exp2)
        }
    }

    pub fn total_cmp(&self, other: &LogScale) -> Ordering {
        self.value().total_cmp(&other.value())
    }
}

impl Serialize for LogScale {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::report::ext_real(&self.value(), s)
    }
}

/// A matrix product stored as `exp(log_scale) · core`, with the core
/// renormalised to unit spectral norm after every extension.
#[derive(Clone, Debug)]
pub struct ScaledProduct {
    log_scale: LogScale,
    core: SquareMatrix,
}

impl ScaledProduct {
    /// The empty product `I_d`.
    pub fn identity(dim: usize) -> Result<Self> {
        Ok(Self { log_scale: LogScale::ONE, core: SquareMatrix::identity(dim)? })
    }

    pub fn dim(&self) -> usize {
        self.core.dim()
    }

    pub fn log_scale(&self) -> LogScale {
        self.log_scale
    }

    /// `log ‖product‖`; the core has unit norm so this is the log-scale itself.
    pub fn log_norm(&self) -> f64 {
        self.log_scale.value()
    }

    pub fn core(&self) -> &SquareMatrix {
        &self.core
    }

    pub fn is_zero(&self) -> bool {
        self.log_scale.is_zero()
    }

    /// Right-multiplies by `m`, returning the new product.
    pub fn extend(&self, m: &SquareMatrix) -> Result<Self> {
        let mut out = self.clone();
        out.extend_in_place(m)?;
        Ok(out)
    }

    pub fn extend_in_place(&mut self, m: &SquareMatrix) -> Result<()> {
        check_dim(self.dim(), m.dim())?;
        if self.is_zero() {
            return Ok(());
        }
        let d = self.dim();
        let raw = mul_raw(self.core.as_slice(), m.as_slice(), d);
        let n = spectral_norm_raw(&raw, d);
        if n == 0.0 {
            self.log_scale = LogScale::ZERO;
            self.core = SquareMatrix::zeros(d)?;
            return Ok(());
        }
        self.log_scale = self.log_scale.combine(LogScale::of(n));
        self.core = SquareMatrix::from_raw_unchecked(d, raw.into_iter().map(|x| x / n).collect());
        Ok(())
    }

    /// The product applied to `z`, kept in log scale.
    pub fn apply(&self, z: &Vector) -> Result<ScaledVec> {
        check_dim(self.dim(), z.dim())?;
        if self.is_zero() {
            return Ok(ScaledVec::zero(self.dim()));
        }
        let raw = mul_vec_raw(self.core.as_slice(), z.as_slice(), self.dim());
        Ok(ScaledVec::from_raw(self.log_scale, raw))
    }

    /// Dense entries of the represented product; may overflow to `inf`.
    pub fn materialize(&self) -> Vec<f64> {
        let f = self.log_scale.factor();
        self.core.as_slice().iter().map(|x| x * f).collect()
    }
}

/// A vector stored as `exp(log_scale) · core` with `|core| = 1` (or zero).
#[derive(Clone, Debug)]
pub struct ScaledVec {
    log_scale: LogScale,
    core: Vector,
}

impl ScaledVec {
    pub fn new(z: &Vector) -> Self {
        Self::from_raw(LogScale::ONE, z.as_slice().to_vec())
    }

    pub fn zero(dim: usize) -> Self {
        Self { log_scale: LogScale::ZERO, core: Vector::from_raw_unchecked(vec![0.0; dim]) }
    }

    fn from_raw(base: LogScale, raw: Vec<f64>) -> Self {
        let n = euclidean_norm(&raw);
        if n == 0.0 || base.is_zero() {
            return Self::zero(raw.len());
        }
        Self {
            log_scale: base.combine(LogScale::of(n)),
            core: Vector::from_raw_unchecked(raw.into_iter().map(|x| x / n).collect()),
        }
    }

    pub fn dim(&self) -> usize {
        self.core.dim()
    }

    pub fn log_scale(&self) -> LogScale {
        self.log_scale
    }

    /// `log |vector|`
    pub fn log_norm(&self) -> f64 {
        self.log_scale.value()
    }

    pub fn core(&self) -> &Vector {
        &self.core
    }

    pub fn is_zero(&self) -> bool {
        self.log_scale.is_zero()
    }

    /// `m · self`
    pub fn left_mul(&self, m: &SquareMatrix) -> Result<Self> {
        check_dim(self.dim(), m.dim())?;
        if self.is_zero() {
            return Ok(self.clone());
        }
        let raw = mul_vec_raw(m.as_slice(), self.core.as_slice(), self.dim());
        Ok(Self::from_raw(self.log_scale, raw))
    }

    /// Dense entries; may overflow to `inf` or underflow to zero.
    pub fn materialize(&self) -> Vec<f64> {
        let f = self.log_scale.factor();
        self.core.as_slice().iter().map(|x| x * f).collect()
    }
}
