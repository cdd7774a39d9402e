use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Vector;
use crate::rng::RngStream;

use super::check_weights;

/// Law of a random vector, used for `Z_0` and for innovations that are
/// drawn independently of the coefficient matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VectorLaw {
    Constant { value: Vector },
    /// Independent normal coordinates `mean_i + std · N(0, 1)`.
    Gaussian { mean: Vector, std: f64 },
    FiniteSupport { points: Vec<Vector>, probs: Vec<f64> },
}

impl VectorLaw {
    pub fn zero(dim: usize) -> Result<Self> {
        Ok(VectorLaw::Constant { value: Vector::zeros(dim)? })
    }

    pub fn constant(value: Vector) -> Self {
        VectorLaw::Constant { value }
    }

    pub fn gaussian(mean: Vector, std: f64) -> Result<Self> {
        let law = VectorLaw::Gaussian { mean, std };
        law.validate()?;
        Ok(law)
    }

    pub fn finite_support(points: Vec<Vector>, probs: Vec<f64>) -> Result<Self> {
        let law = VectorLaw::FiniteSupport { points, probs };
        law.validate()?;
        Ok(law)
    }

    pub fn dim(&self) -> usize {
        match self {
            VectorLaw::Constant { value } => value.dim(),
            VectorLaw::Gaussian { mean, .. } => mean.dim(),
            VectorLaw::FiniteSupport { points, .. } => points.first().map_or(0, Vector::dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            VectorLaw::Constant { .. } => Ok(()),
            VectorLaw::Gaussian { std, .. } => {
                if !(std.is_finite() && *std >= 0.0) {
                    return Err(Error::InvalidInput(format!("gaussian std must be finite and >= 0, got {std}")));
                }
                Ok(())
            }
            VectorLaw::FiniteSupport { points, probs } => {
                if points.is_empty() {
                    return Err(Error::InvalidInput("finite-support law needs at least one point".into()));
                }
                check_dim(points.len(), probs.len())?;
                let d = points[0].dim();
                for p in points {
                    check_dim(d, p.dim())?;
                }
                check_weights(probs)
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match self {
            VectorLaw::Constant { .. } => true,
            VectorLaw::Gaussian { std, .. } => *std == 0.0,
            VectorLaw::FiniteSupport { points, probs } => {
                let support: Vec<&Vector> =
                    points.iter().zip(probs).filter(|(_, p)| **p > 0.0).map(|(v, _)| v).collect();
                support.windows(2).all(|w| w[0] == w[1])
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vector {
        match self {
            VectorLaw::Constant { value } => value.clone(),
            VectorLaw::Gaussian { mean, std } => {
                if *std == 0.0 {
                    return mean.clone();
                }
                let data = mean.as_slice().iter().map(|m| m + std * rng.standard_normal()).collect();
                Vector::from_raw_unchecked(data)
            }
            VectorLaw::FiniteSupport { points, probs } => points[rng.categorical(probs)].clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_validation() {
        let law: VectorLaw =
            serde_json::from_str(r#"{"kind":"finite-support","points":[[1,0],[0,1]],"probs":[0.25,0.75]}"#).unwrap();
        law.validate().unwrap();
        assert_eq!(law.dim(), 2);
        let back: VectorLaw = serde_json::from_value(serde_json::to_value(&law).unwrap()).unwrap();
        assert_eq!(back, law);

        let bad: VectorLaw =
            serde_json::from_str(r#"{"kind":"finite-support","points":[[1,0]],"probs":[0.5]}"#).unwrap();
        assert!(bad.validate().is_err());
        assert!(VectorLaw::gaussian(Vector::zeros(2).unwrap(), -1.0).is_err());
    }

    #[test]
    fn zero_std_gaussian_is_its_mean() {
        let mean = Vector::new(vec![1.0, -2.0]).unwrap();
        let law = VectorLaw::gaussian(mean.clone(), 0.0).unwrap();
        let mut rng = RngStream::new(3, 0);
        assert!(law.is_degenerate());
        for _ in 0..10 {
            assert_eq!(law.sample(&mut rng), mean);
        }
    }
}
