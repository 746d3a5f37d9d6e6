use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong between building a grid and writing a report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("unsupported derivative order {0} (expected 1, 2 or 3)")]
    UnsupportedOrder(u32),

    #[error("periodic antiderivative needs zero-mean input, got mean {mean:e} (allowed {allowed:e})")]
    NonZeroMean { mean: f64, allowed: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("surface touches or crosses the bottom: max|eta| = {max_eta} >= h = {depth}")]
    SurfaceBelowBottom { max_eta: f64, depth: f64 },

    #[error("harmonic extension did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("surface too steep for the mode basis: amplification {amplification:e} exceeds {limit:e}")]
    IllConditioned { amplification: f64, limit: f64 },

    #[error("edge guard violated: |{field}| = {magnitude:e} at x = {x} (threshold {threshold:e})")]
    EdgeGuard {
        field: &'static str,
        x: f64,
        magnitude: f64,
        threshold: f64,
    },

    #[error("non-finite value produced in RK4 stage {stage} at t = {t}")]
    NonFinite { stage: usize, t: f64 },

    #[error("mass flux has nonzero mean {mean:e}; discretisation fault")]
    MassFlux { mean: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSeries { needed: usize, got: usize },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("validation failed for {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to configuration or IO).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EdgeGuard { .. }
                | Error::NonFinite { .. }
                | Error::MassFlux { .. }
                | Error::NonConvergence { .. }
                | Error::IllConditioned { .. }
                | Error::SurfaceBelowBottom { .. }
                | Error::NonZeroMean { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
