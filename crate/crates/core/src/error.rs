use std::path::PathBuf;

use crate::grid::Space;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("field is in {found:?} space, expected {expected:?}")]
    SpaceMismatch { expected: Space, found: Space },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not reach tolerance {tol:e} within {budget} subintervals (error estimate {estimate:e})")]
    QuadratureBudget { tol: f64, budget: usize, estimate: f64 },

    #[error("picard iteration did not converge in {iterations} iterations (last change {change:e})")]
    PicardDiverged { iterations: usize, change: f64 },

    #[error("boundary guard violated at t = {t}: edge magnitude {edge:e} exceeds {guard:e}")]
    BoundaryGuard { t: f64, edge: f64, guard: f64 },

    #[error("solution left the invariant range at t = {t}: min {min:e}, max {max:e}")]
    RangeViolation { t: f64, min: f64, max: f64 },

    #[error("{0}")]
    EmptyWindow(String),

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
