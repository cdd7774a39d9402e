//! Dense linear algebra for products of random matrices.

mod matrix;
mod norm;
mod scaled;
mod suffix;

pub use matrix::{SquareMatrix, Vector};
pub use norm::spectral_norm;
pub use scaled::{LogScale, ScaledProduct, ScaledVec};
pub use suffix::{suffix_min_norm, suffix_min_term, SuffixNormTracker, DEFAULT_T_MAX};

