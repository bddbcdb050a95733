use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {}x{}, found {}x{}", expected.0, expected.1, found.0, found.1)]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("field of size {width}x{height} is too small to restrict (need at least 4x4)")]
    TooSmall { width: usize, height: usize },

    #[error("source luminance is constant; luminance remapping needs a positive variance")]
    DegenerateLuminance,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{stage} diverged: {detail}")]
    Divergence { stage: &'static str, detail: String },

    #[error("deformation {step} is not orientation preserving (det = {det:.3e} at row {row}, column {col})")]
    NonDiffeomorphic {
        step: usize,
        det: f64,
        row: usize,
        col: usize,
    },
}

impl Error {
    /// True for failures of the numerical solvers, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::NonDiffeomorphic { .. })
    }
}
