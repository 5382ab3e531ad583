//! Gradient estimators for the swarm.
//!
//! [`wls_regional_gradient`] is the memory-based estimator: it regresses
//! objective differences on position differences over the whole
//! [`EvaluationArchive`], weighting each record by a Gaussian kernel centred on
//! the query point. [`finite_difference_gradient`] and [`egs_gradient`] are
//! the sampling baselines; they spend fresh evaluations and hand them back so
//! the caller can archive them.

mod archive;
mod linalg;
mod sampling;
mod wls;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::ObjectiveError;

pub use archive::{ArchiveError, CapacityPolicy, EvaluationArchive};
pub use sampling::{egs_gradient, finite_difference_gradient, EgsConfig, EvalTag, FdConfig, Sampled};
pub use wls::{gaussian_weights, wls_regional_gradient, Ridge, WlsConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradientError {
    #[error("need at least {required} archived samples, have {available}")]
    InsufficientData { required: usize, available: usize },
    #[error("all Gaussian weights underflowed")]
    DegenerateWeights,
    #[error("gradient is the zero vector")]
    ZeroGradient,
    #[error("expected a {expected}-dimensional point, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    /// Estimated partial derivatives.
    pub g: Vec<f64>,
    /// Sum of the unnormalized kernel weights (WLS) or the sample count
    /// (sampling estimators).
    pub effective_weight: f64,
    pub condition_ok: bool,
    pub samples_used: usize,
}

impl GradientEstimate {
    pub fn direction(&self) -> Result<Vec<f64>, GradientError> {
        normalize_direction(&self.g)
    }

    pub(crate) fn failed(n: usize, effective_weight: f64, samples_used: usize) -> Self {
        Self {
            g: vec![0.0; n],
            effective_weight,
            condition_ok: false,
            samples_used,
        }
    }
}

/// `g / |g|`.
pub fn normalize_direction(g: &[f64]) -> Result<Vec<f64>, GradientError> {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(GradientError::ZeroGradient);
    }
    Ok(g.iter().map(|v| v / norm).collect())
}

/// Cosine of the angle between two vectors; 0 if either is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
