use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    /// An operator expected to be Hermitian is not, within tolerance.
    #[error("matrix is not Hermitian: ‖H − H†‖_F = {residual:e}")]
    NotHermitian { residual: f64 },
    /// Shapes of the operands do not fit together.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A constructor parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Two representations (or a representation and a group) do not share a source.
    #[error("representations are defined over different sources")]
    SourceMismatch,
    /// The random-element decomposition did not certify within the redraw budget.
    #[error("isotypic decomposition failed after {attempts} attempts: {reason}")]
    DecompositionFailed { attempts: usize, reason: String },
    /// A superoperator is not completely positive and trace preserving.
    #[error("channel is not CPTP: {0}")]
    NotCptp(String),
    /// The requested computation exceeds the desk-scale dimension cap.
    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    /// A layer refers to a generator that does not exist.
    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    /// The mixed-state shell radii are not `0 ≤ r_lo < r_hi < 1`.
    #[error("invalid shell [{lo}, {hi}]; need 0 ≤ r_lo < r_hi < 1")]
    InvalidShell { lo: f64, hi: f64 },
    /// A check that must hold before this one did not.
    #[error("prerequisite failed: {0}")]
    PrerequisiteFailed(String),
    /// A composition table fails the group axioms.
    #[error("not a group: {0}")]
    NotAGroup(String),
    /// Hermitian seeds that do not close under commutators were used as an algebra basis.
    #[error("generators do not close under the commutator: residual {residual:e}")]
    NotClosed { residual: f64 },
    /// A loaded representation fails the homomorphism check.
    #[error("representation rejected: homomorphism residual {residual:e} exceeds {tol:e}")]
    NotAHomomorphism { residual: f64, tol: f64 },
    /// JSON encoding or decoding failed.
    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// Numerical failures, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::DecompositionFailed { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
