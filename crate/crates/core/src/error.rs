use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the lab.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("non-finite value in {0}")]
    Domain(&'static str),

    #[error("newton iteration did not converge after {iterations} steps (last residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("guess connects identical rest states")]
    DegenerateFront,

    #[error("rest state is not an equilibrium: |f| = {0:.3e}")]
    NotAnEquilibrium(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("grid cannot resolve derivatives of order {order} with {nodes} nodes")]
    Resolution { order: usize, nodes: usize },

    #[error("translational eigenvalue is not simple: nearest eigenvalues {first:.3e} and {second:.3e}")]
    Simplicity { first: f64, second: f64 },

    #[error("perturbation left the tubular neighbourhood of the front: {0}")]
    DecompositionOutOfRange(String),

    #[error("|pi(phi'_q)| = {value:.3e} fell below the guard {floor:.3e}")]
    DivisionGuard { value: f64, floor: f64 },

    #[error("solution blew up; last finite state at t = {last_valid_time}")]
    BlowUp { last_valid_time: f64 },

    #[error("time step {dt} exceeds the stability bound {dt_max}")]
    TimeStep { dt: f64, dt_max: f64 },

    #[error("eigensolver failure on a {size}x{size} operator (h = {spacing}): {reason}")]
    Eigen {
        size: usize,
        spacing: f64,
        reason: String,
    },

    #[error("cannot fit decay: {0}")]
    Fit(String),

    #[error("singular matrix at pivot {0}")]
    Singular(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing artifact {path}; run the `{stage}` stage first")]
    MissingArtifact { path: PathBuf, stage: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LabError::Domain(what))
    }
}
