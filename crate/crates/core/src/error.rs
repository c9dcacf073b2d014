use thiserror::Error;

/// Errors raised anywhere in the reduction pipeline.
#[derive(Debug, Error)]
pub enum WongError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("evaluation failed: {0}")]
    EvaluationFailure(String),

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("degenerate orbit: orbit metric condition number {cond:.3e}")]
    DegenerateOrbit { cond: f64 },

    #[error("Gribov horizon: Faddeev-Popov matrix condition number {cond:.3e}")]
    GribovHorizon { cond: f64 },

    #[error("system is not flagged as flat")]
    NotFlat,

    #[error("integration step failed at t = {t}: {source}")]
    StepFailure {
        t: f64,
        #[source]
        source: Box<WongError>,
    },

    #[error("constraint projection diverged after {iterations} iterations (|chi| = {residual:.3e})")]
    ProjectionDiverged { iterations: usize, residual: f64 },

    #[error("degenerate total-space metric: {0}")]
    DegenerateMetric(String),

    #[error("degenerate horizontal/vertical basis (smallest singular value {0:.3e})")]
    DegenerateBasis(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:.3e})")]
    SolverStalled { iterations: usize, residual: f64 },

    #[error("right-hand side has zero-mode content {0:.3e}")]
    KernelComponent(f64),

    #[error("constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("lattice too large to materialize: N_P = {0}")]
    TooLarge(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WongError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        WongError::DimensionMismatch(msg.into())
    }

    /// True for failures caused by bad input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            WongError::Config(_) | WongError::UnknownSystem(_) | WongError::DimensionMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, WongError>;
