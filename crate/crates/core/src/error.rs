use thiserror::Error;

/// Failures reported by the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("structure polynomial negative at level {level}: {value:e}")]
    NegativePsi { level: usize, value: f64 },

    #[error("sector dimension {dim} exceeds cap {cap}")]
    DimCapExceeded { dim: usize, cap: usize },

    #[error("Fock basis size {size} exceeds cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("chain state |{n0},{n1}> lies outside Fock cutoff {cutoff}")]
    OutOfCutoff { n0: i64, n1: i64, cutoff: u32 },

    #[error("Fock cutoff {cutoff} too small, need at least {required}")]
    CutoffTooSmall { cutoff: u32, required: u32 },

    #[error("tridiagonal eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("initial state not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("Holstein-Primakoff factor negative at level {level}: {value:e}")]
    NegativePhi { level: usize, value: f64 },

    #[error("mean-field factor negative at argument {arg}: {value:e}")]
    PhiNegative { arg: f64, value: f64 },

    #[error("coherent state tail mass {mass:e} exceeds bound, enlarge the truncation")]
    TruncationTail { mass: f64 },

    #[error("unsupported map: {0}")]
    InvalidMap(String),

    #[error("exact integer arithmetic overflowed")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, Error>;
