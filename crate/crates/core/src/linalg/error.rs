use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("state norm vanished (⟨ψ|ψ⟩ = {norm_sqr:e})")]
    VanishedNorm { norm_sqr: f64 },
    #[error("state has no amplitudes")]
    EmptyState,
    #[error("operator flagged Hermitian deviates from its adjoint by {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("tensor product dimension {dim} exceeds the configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("dimension {dim} does not factor as {d_sys} × {d_bath}")]
    FactorMismatch { dim: usize, d_sys: usize, d_bath: usize },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("operation requires a Hermitian operator")]
    RequiresHermitian,
    #[error("band storage shape is inconsistent: {0}")]
    BadBand(String),
    #[error("requested {requested} eigenpairs but dimension is {dim}")]
    TooManyEigenpairs { requested: usize, dim: usize },
}
