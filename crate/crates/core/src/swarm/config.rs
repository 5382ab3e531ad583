use serde::{Deserialize, Serialize};

use super::SwarmError;
use crate::gradient::{EgsConfig, FdConfig, Ridge, WlsConfig};
use crate::objective::ObjectiveSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    None,
    #[default]
    Wls,
    Fd,
    Egs,
}

/// Swarm parameters. Defaults: `w = 0.6, c1 = 0.5, c3 = 0.7, c2 = 1.25 - c3`,
/// 20 particles, at most 200 iterations, stop after 50 stalled iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub swarm_size: usize,
    /// Inertia weight.
    pub w: f64,
    /// Attraction to the personal best.
    pub c1: f64,
    /// Attraction to the global best.
    pub c2: f64,
    /// Weight of the gradient term.
    pub c3: f64,
    pub dt: f64,
    /// Per-dimension velocity clamp.
    pub v_max: Option<Vec<f64>>,
    pub max_iters: usize,
    pub stall_iters: usize,
    /// Minimum relative improvement of gbest over `stall_iters` iterations.
    pub stall_tol: f64,
    pub estimator: Estimator,
    /// Kernel covariance as a fraction of each coordinate's domain width.
    pub sigma_frac: f64,
    /// Estimate gradients every `m` iterations.
    pub gradient_every: usize,
    pub min_samples: Option<usize>,
    pub ridge: Ridge,
    pub max_lookback: Option<usize>,
    /// Ring-buffer size for the archive; unbounded when absent.
    pub archive_capacity: Option<usize>,
    pub fd_epsilon: f64,
    pub egs_lambda: usize,
    /// EGS mutation radius as a fraction of the mean domain width.
    pub egs_sigma_frac: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 20,
            w: 0.6,
            c1: 0.5,
            c2: 0.55,
            c3: 0.7,
            dt: 1.0,
            v_max: None,
            max_iters: 200,
            stall_iters: 50,
            stall_tol: 1e-8,
            estimator: Estimator::Wls,
            sigma_frac: 0.1,
            gradient_every: 1,
            min_samples: None,
            ridge: Ridge::default(),
            max_lookback: None,
            archive_capacity: None,
            fd_epsilon: 1e-6,
            egs_lambda: 10,
            egs_sigma_frac: 0.01,
            seed: 0,
        }
    }
}

impl PsoConfig {
    /// Plain PSO with the same weights.
    pub fn classic(&self) -> Self {
        Self {
            estimator: Estimator::None,
            ..self.clone()
        }
    }

    /// Whether the gradient term takes part in the velocity update.
    pub fn uses_gradient(&self) -> bool {
        self.estimator != Estimator::None && self.c3 != 0.0
    }

    /// Step size of the embedded gradient-descent update.
    pub fn learning_rate(&self) -> f64 {
        self.c3 * self.dt
    }

    pub fn validate(&self, dimension: usize) -> Result<(), SwarmError> {
        let bad = |m: &str| Err(SwarmError::Config(m.to_string()));
        if self.swarm_size < 2 {
            return bad("swarm_size must be at least 2");
        }
        for (name, v) in [("w", self.w), ("c1", self.c1), ("c2", self.c2), ("c3", self.c3)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SwarmError::Config(format!("{name} must be finite and nonnegative")));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1");
        }
        if self.stall_iters < 1 {
            return bad("stall_iters must be at least 1");
        }
        if !(self.stall_tol.is_finite() && self.stall_tol >= 0.0) {
            return bad("stall_tol must be nonnegative");
        }
        if self.gradient_every < 1 {
            return bad("gradient_every must be at least 1");
        }
        if let Some(v) = &self.v_max {
            if v.len() != dimension || v.iter().any(|x| !(*x > 0.0)) {
                return bad("v_max needs one positive entry per dimension");
            }
        }
        if self.archive_capacity == Some(0) {
            return bad("archive_capacity must be positive");
        }
        if self.estimator != Estimator::None {
            if !(self.sigma_frac.is_finite() && self.sigma_frac > 0.0) {
                return bad("sigma_frac must be positive");
            }
            if !(self.fd_epsilon.is_finite() && self.fd_epsilon > 0.0) {
                return bad("fd_epsilon must be positive");
            }
            if self.egs_lambda < 1 {
                return bad("egs_lambda must be at least 1");
            }
            if !(self.egs_sigma_frac.is_finite() && self.egs_sigma_frac > 0.0) {
                return bad("egs_sigma_frac must be positive");
            }
        }
        Ok(())
    }

    pub fn wls_config(&self, spec: &ObjectiveSpec) -> WlsConfig {
        let mut cfg = WlsConfig::from_widths(&spec.widths(), self.sigma_frac).with_ridge(self.ridge);
        if let Some(m) = self.min_samples {
            cfg.min_samples = m.max(spec.dimension + 1);
        }
        cfg.max_lookback = self.max_lookback;
        cfg
    }

    pub fn fd_config(&self) -> FdConfig {
        FdConfig {
            epsilon: self.fd_epsilon,
        }
    }

    pub fn egs_config(&self, spec: &ObjectiveSpec) -> EgsConfig {
        let widths = spec.widths();
        let mean = widths.iter().sum::<f64>() / widths.len() as f64;
        EgsConfig {
            lambda_test: self.egs_lambda,
            sigma_mut: self.egs_sigma_frac * mean,
        }
    }
}
