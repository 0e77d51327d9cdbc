use thiserror::Error;

/// Errors raised by the reconstruction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QrmError {
    #[error("extent {extent} is not an integer multiple of step {step}")]
    NonCommensurate { extent: f64, step: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("CFL condition violated: lambda_x + lambda_y = {0} > 1")]
    CflViolation(f64),

    #[error("initial data nonzero outside the support square at ({x1}, {x2}): {value}")]
    SupportViolation { x1: f64, x2: f64, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("index ({k}, {m}, {n}) is not an interior node")]
    IndexOutOfInterior { k: usize, m: usize, n: usize },

    #[error("point ({x1}, {x2}) is not a grid node")]
    NodeMisaligned { x1: f64, x2: f64 },

    #[error("non-positive curvature {0} along search direction")]
    DegenerateCurvature(f64),

    #[error("search direction is not a descent direction (g.d = {0})")]
    NonDescentDirection(f64),

    #[error("non-finite value encountered in {0}")]
    NonFiniteEncountered(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, QrmError>;
