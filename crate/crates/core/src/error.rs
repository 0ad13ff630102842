use thiserror::Error;

/// Errors raised by the simulation kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("eigensolver did not converge ({0})")]
    NoConvergence(String),

    #[error("total dimension {requested} exceeds the cap of {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("bad subsystem or basis index: {0}")]
    BadIndex(String),

    #[error("states live on different registers")]
    RegisterMismatch,

    #[error("operator has a negative eigenvalue {0:e}")]
    NotPositive(f64),

    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("operator is not unitary (residual {0:e})")]
    NotUnitary(f64),

    #[error("nonzero Schmidt coefficients are not all equal")]
    NotEven,

    #[error("pointer states are not orthonormal (max Gram deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("demanded record map is not an isometry (max overlap defect {0:e})")]
    InconsistentRecords(f64),

    #[error("system entropy {0:e} is too small to be redundantly recorded")]
    DegeneratePlateau(f64),

    #[error("no fragment reaches the information threshold {threshold} bits")]
    NeverReached { threshold: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
