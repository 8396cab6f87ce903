use thiserror::Error;

/// Errors from spectral field construction and coefficient access.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    /// A mean (s = 0) component was requested or supplied; the field space
    /// contains only zero-mean functions.
    #[error("zero-mean violation: mode s = 0 does not exist in this basis")]
    ZeroMeanViolation,
    #[error("mode s = {s} out of range for cutoff K = {k_max}")]
    ModeOutOfRange { s: i64, k_max: usize },
    #[error("grid size {n_grid} too small for cutoff K = {k_max} (need N >= 4K)")]
    GridTooSmall { n_grid: usize, k_max: usize },
    #[error("grid size {0} is not a power of two")]
    GridNotPowerOfTwo(usize),
    #[error("cutoff mismatch: K = {left} vs K = {right}")]
    CutoffMismatch { left: usize, right: usize },
    #[error("invalid field data: {0}")]
    InvalidData(String),
}

/// Errors from time integration of the deterministic / stochastic KdV flow.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("non-finite state at t = {t}: {detail}")]
    NonFinite { t: f64, detail: String },
    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Errors from the Hill operator eigenproblem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HillError {
    #[error(
        "truncation too small: band-edge interlacing violated at index {index} \
         (M_trunc = {m_trunc}); increase M_trunc"
    )]
    Truncation { index: usize, m_trunc: usize },
    #[error("M_trunc = {m_trunc} must be at least 4 * K_spec = {min}")]
    TruncationBelowMinimum { m_trunc: usize, min: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Errors from the slow-fast averaging engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AveragingError {
    #[error("covariance not positive semidefinite: eigenvalue {eigenvalue} < -{tolerance}")]
    IndefiniteCovariance { eigenvalue: f64, tolerance: f64 },
    #[error("non-finite state at tau = {tau}")]
    NonFinite { tau: f64 },
    #[error("time step dt = {dt} too large for nu = {nu} (need dt <= nu/10)")]
    TimeStepTooLarge { dt: f64, nu: f64 },
    #[error("initial actions must lie in the open octant (all I_j > 0); I_{index} = {value}")]
    NotInOctantInterior { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Errors from experiment orchestration, statistics, and persistence.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("sample dimension mismatch: {left} vs {right}")]
    SampleDimensionMismatch { left: usize, right: usize },
    #[error("empty sample set: {0}")]
    EmptySamples(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Hill(#[from] HillError),
    #[error(transparent)]
    Averaging(#[from] AveragingError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}
