use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::InventoryError;

/// Weekly demand distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandModel {
    /// Normal draws truncated at zero and rounded to whole units.
    Normal { mean: f64, std: f64 },
    /// Inverse-transform sampling on the empirical CDF of `samples` (sorted).
    Empirical { samples: Vec<f64> },
}

impl DemandModel {
    pub fn empirical(mut samples: Vec<f64>) -> Result<Self, InventoryError> {
        samples.sort_by(f64::total_cmp);
        let m = Self::Empirical { samples };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), InventoryError> {
        match self {
            Self::Normal { mean, std } => {
                if !(mean.is_finite() && std.is_finite() && *std >= 0.0) {
                    return Err(InventoryError::InvalidSpec(format!(
                        "normal demand needs finite mean and std >= 0, got ({mean}, {std})"
                    )));
                }
            }
            Self::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(InventoryError::InvalidSpec("empirical demand needs at least one sample".into()));
                }
                if samples.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                    return Err(InventoryError::InvalidSpec("empirical samples must be finite and >= 0".into()));
                }
                if samples.windows(2).any(|w| w[0] > w[1]) {
                    return Err(InventoryError::InvalidSpec("empirical samples must be sorted".into()));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Normal { mean, .. } => *mean,
            Self::Empirical { samples } => samples.iter().sum::<f64>() / samples.len() as f64,
        }
    }
}

fn units(v: f64) -> u64 {
    v.max(0.0).round() as u64
}

/// One weekly demand draw in whole units. Consumes one draw.
pub fn sample_demand(model: &DemandModel, rng: &mut dyn RngCore) -> u64 {
    match model {
        DemandModel::Normal { mean, std } => {
            let z: f64 = rng.sample(StandardNormal);
            units(mean + std * z)
        }
        DemandModel::Empirical { samples } => {
            let u: f64 = rng.random();
            let m = samples.len();
            let idx = ((u * m as f64).ceil() as usize).saturating_sub(1).min(m - 1);
            units(samples[idx])
        }
    }
}
