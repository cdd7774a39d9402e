use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("frame vectors are not orthonormal: {0}")]
    Frame(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// More than one (or no) minimal-polynomial candidate passed the
    /// annihilation test.
    #[error("ambiguous minimal polynomial: {detail} (candidate degrees {candidates:?})")]
    Degeneracy {
        candidates: Vec<usize>,
        detail: String,
    },

    #[error("interpolation system is ill-conditioned (condition number {0:.3e})")]
    Conditioning(f64),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
