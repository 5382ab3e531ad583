//! Gradient baselines that spend fresh objective evaluations.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GradientError, GradientEstimate};
use crate::objective::{Evaluation, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub epsilon: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { epsilon: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgsConfig {
    /// Number of test candidates per estimate.
    pub lambda_test: usize,
    /// Mutation radius; each coordinate is perturbed with std `sigma_mut / sqrt(n)`.
    pub sigma_mut: f64,
}

/// Labels the evaluations a sampling estimator makes so they can be archived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalTag {
    pub iteration: usize,
    pub particle_id: usize,
}

/// An estimate plus the evaluations spent on it, in the order they were made.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub estimate: GradientEstimate,
    pub evaluations: Vec<Evaluation>,
}

fn record<O: Objective + ?Sized>(
    f: &O,
    position: Vec<f64>,
    tag: EvalTag,
    rng: &mut dyn RngCore,
) -> Result<Evaluation, GradientError> {
    let value = f.evaluate(&position, rng)?;
    Ok(Evaluation {
        position,
        value,
        iteration: tag.iteration,
        particle_id: tag.particle_id,
        rng_draws: f.rng_draws(),
    })
}

/// Forward differences along each axis; `n + 1` evaluations.
///
/// When `x_i + epsilon` leaves the box the step is taken backwards instead.
pub fn finite_difference_gradient<O: Objective + ?Sized>(
    f: &O,
    x: &[f64],
    cfg: &FdConfig,
    tag: EvalTag,
    rng: &mut dyn RngCore,
) -> Result<Sampled, GradientError> {
    if !(cfg.epsilon.is_finite() && cfg.epsilon > 0.0) {
        return Err(GradientError::InvalidConfig("epsilon must be positive".into()));
    }
    let spec = f.spec();
    spec.check_point(x)?;
    let n = x.len();
    let mut evaluations = Vec::with_capacity(n + 1);
    let base = record(f, x.to_vec(), tag, rng)?;
    let f_x = base.value;
    evaluations.push(base);
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let h = if x[i] + cfg.epsilon > spec.bounds[i].hi {
            -cfg.epsilon
        } else {
            cfg.epsilon
        };
        let mut p = x.to_vec();
        p[i] += h;
        let e = record(f, p, tag, rng)?;
        g.push((e.value - f_x) / h);
        evaluations.push(e);
    }
    let ok = g.iter().all(|v| v.is_finite());
    Ok(Sampled {
        estimate: GradientEstimate {
            g,
            effective_weight: (n + 1) as f64,
            condition_ok: ok,
            samples_used: n + 1,
        },
        evaluations,
    })
}

/// Evolutionary-gradient-search estimate `sum_i (f(v_i) - f_x) (v_i - x)`.
///
/// Candidates are `x + z_i` with `z_i ~ N(0, (sigma/sqrt n)^2 I)`, clipped to
/// the box. The result is not normalized; use [`GradientEstimate::direction`]
/// for the unit vector.
pub fn egs_gradient<O: Objective + ?Sized>(
    f: &O,
    x: &[f64],
    f_x: f64,
    cfg: &EgsConfig,
    tag: EvalTag,
    rng: &mut dyn RngCore,
) -> Result<Sampled, GradientError> {
    if cfg.lambda_test == 0 {
        return Err(GradientError::InvalidConfig("lambda_test must be at least 1".into()));
    }
    if !(cfg.sigma_mut.is_finite() && cfg.sigma_mut > 0.0) {
        return Err(GradientError::InvalidConfig("sigma_mut must be positive".into()));
    }
    let spec = f.spec();
    spec.check_point(x)?;
    let n = x.len();
    let scale = cfg.sigma_mut / (n as f64).sqrt();
    let mut g = vec![0.0; n];
    let mut evaluations = Vec::with_capacity(cfg.lambda_test);
    for _ in 0..cfg.lambda_test {
        let v: Vec<f64> = x
            .iter()
            .zip(&spec.bounds)
            .map(|(xi, b)| {
                let z: f64 = rng.sample(StandardNormal);
                b.clamp(xi + scale * z)
            })
            .collect();
        let e = record(f, v, tag, rng)?;
        let df = e.value - f_x;
        for ((gi, vi), xi) in g.iter_mut().zip(&e.position).zip(x) {
            *gi += df * (vi - xi);
        }
        evaluations.push(e);
    }
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(Sampled {
        estimate: GradientEstimate {
            condition_ok: norm > 0.0 && norm.is_finite(),
            g,
            effective_weight: cfg.lambda_test as f64,
            samples_used: cfg.lambda_test,
        },
        evaluations,
    })
}
