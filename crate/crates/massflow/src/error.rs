use thiserror::Error;

/// Errors produced by chart evaluation, quadrature, assembly and solves.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown chart '{0}' (registered: {1})")]
    UnknownChart(String, String),

    #[error("unknown conformal factor '{0}' (registered: {1})")]
    UnknownFactor(String, String),

    #[error("bad parameter for '{target}': {message}")]
    BadParameter { target: String, message: String },

    #[error("point {point:?} outside chart domain: {reason}")]
    OutsideDomain { point: [f64; 3], reason: String },

    #[error("metric not positive definite at {point:?} (leading minors {minors:?})")]
    NotPositiveDefinite { point: [f64; 3], minors: [f64; 3] },

    #[error("point {point:?} not on surface {surface} (offset {offset:.3e})")]
    NotOnSurface {
        point: [f64; 3],
        surface: String,
        offset: f64,
    },

    #[error("quadrature not converged at rho = {rho}: refinement moved the integral by {delta:.3e}")]
    QuadratureNotConverged { rho: f64, delta: f64 },

    #[error("extrapolation needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("degenerate domain spec: {0}")]
    DegenerateDomain(String),

    #[error("solver stagnated after {iterations} iterations (relative residual {residual:.3e})")]
    SolverStagnated { iterations: usize, residual: f64 },

    #[error("solver hit the iteration cap {max_iter} (relative residual {residual:.3e})")]
    MaxIterations { max_iter: usize, residual: f64 },

    #[error("field file malformed: {0}")]
    MalformedField(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
