use alloc::string::String;


use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("matrix is not Hermitian: |A[{row}][{col}] - conj(A[{col}][{row}])| = {deviation:e} exceeds tolerance (max|A| = {scale:e})")]
    NotHermitian { row: usize, col: usize, deviation: f64, scale: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    NotPsd { eigenvalue: f64 },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("dimension {dim} exceeds eigensolver limit {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error("custom initial state has norm {norm}, expected 1")]
    NotNormalized { norm: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("Cholesky factorisation failed at pivot {pivot} (value {value:e})")]
    Cholesky { pivot: usize, value: f64 },
    #[error("noise validation needs at least {required} paths, got {got}")]
    TooFewPaths { required: usize, got: usize },
    #[error("noise path length {got} does not match grid length {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Which coefficient field went non-finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    N(usize),
    M(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoeffError {
    #[error("coefficient field {field:?} became non-finite at t={t}, s={s}{}", fmt_sp(.s_prime))]
    NonFinite { field: FieldKind, t: f64, s: f64, s_prime: Option<f64> },
    #[error("time index {index} beyond solved range (last index {last})")]
    OutOfRange { index: usize, last: usize },
    #[error("grid mismatch between coefficient fields and noise")]
    GridMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn fmt_sp(s: &Option<f64>) -> String {
    match s {
        Some(v) => alloc::format!(", s'={v}"),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("trajectory became non-finite at t={t}")]
    NonFinite { t: f64 },
    #[error("all {count} trajectories were flagged (blow-up or non-finite)")]
    AllFlagged { count: usize },
    #[error("ensemble needs at least one trajectory")]
    Empty,
    #[error("quadrature ensemble requires Gamma = 0 (got {gamma_strength})")]
    QuadratureNeedsNoBath { gamma_strength: f64 },
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("population leaked above the Fock cutoff: {leakage:e}")]
    CutoffLeakage { leakage: f64 },
    #[error("closed-system reference requires Gamma = 0 (got {gamma_strength})")]
    NeedsNoBath { gamma_strength: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Any failure from the simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Non-fatal diagnostics gathered while solving.
#[derive(Debug, Clone, PartialEq)]
pub struct Warning {
    pub message: String,
}

