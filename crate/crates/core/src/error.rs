use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dispersion: omega^2 = {value:e} < 0 at k = {k:?}")]
    InvalidDispersion { k: Vec<f64>, value: f64 },

    #[error("malformed dispersion coefficients: {0}")]
    MalformedCoefficients(String),

    #[error("point k = {k:?} is near the singular set (omega = {omega:e} < eps0 = {eps0:e})")]
    NearSingularSet { k: Vec<f64>, omega: f64, eps0: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("capacity exceeded: more than {cap} collisions enumerated")]
    CapacityExceeded { cap: usize },

    #[error("constraint set is empty: every grid function is trivially invariant")]
    EmptyConstraintSet,

    #[error(
        "iterative solver did not converge after {iterations} iterations (residual {residual:e})"
    )]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("test-function support violation: {0}")]
    SupportViolation(String),

    #[error("moment matrix B is ill-conditioned (cond = {cond:e} > {kappa_max:e})")]
    IllConditionedB { cond: f64, kappa_max: f64 },

    #[error("only {found} admissible test functions found, at least {required} required")]
    InsufficientTestFunctions { found: usize, required: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
