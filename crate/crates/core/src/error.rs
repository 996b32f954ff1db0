use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is numerically rank deficient ({0})")]
    RankDeficient(String),
    #[error("iteration did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("system is not asymptotically stable (spectral abscissa {0:e})")]
    UnstableSystem(f64),
    #[error("non-finite state encountered at t = {0}")]
    NonFiniteState(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("subspaces are on the cut locus (smallest cosine {0:e})")]
    CutLocus(f64),
    #[error("geodesic velocity is zero")]
    ZeroVelocity,
    #[error("coefficient field has a non-positive value {0} at node {1}")]
    NonPositiveCoefficient(f64, usize),
    #[error("CFL condition violated: max|u| dt/dx = {0}")]
    CflViolation(f64),
    #[error("coarse matrix V^T A V is numerically singular")]
    SingularCoarseMatrix,
    #[error("iteration limit reached after {iterations} iterations (relative residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("training diverged at epoch {0}")]
    DivergenceDetected(usize),
    #[error("dataset format version {found} is not supported (expected {expected})")]
    FormatVersionMismatch { found: u32, expected: u32 },
    #[error("corrupt dataset header: {0}")]
    CorruptHeader(String),
    #[error("truncated payload in {file}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        file: String,
        expected: u64,
        found: u64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
