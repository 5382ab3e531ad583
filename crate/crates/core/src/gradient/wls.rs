use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::linalg;
use super::{EvaluationArchive, GradientError, GradientEstimate};

/// Pivot ratio below which the normal matrix is treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Tikhonov term added to the diagonal of the normal matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Ridge {
    /// `factor * trace(A) / n`.
    Relative(f64),
    Absolute(f64),
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::Relative(1e-10)
    }
}

impl Ridge {
    fn value(&self, trace: f64, n: usize) -> f64 {
        match *self {
            Ridge::Relative(f) => f * trace / n as f64,
            Ridge::Absolute(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WlsConfig {
    /// Diagonal of the kernel covariance, one entry per coordinate.
    pub sigma: Vec<f64>,
    pub min_samples: usize,
    pub ridge: Ridge,
    /// Only the newest records are used when set.
    pub max_lookback: Option<usize>,
}

impl WlsConfig {
    pub fn isotropic(dimension: usize, sigma: f64) -> Self {
        Self {
            sigma: vec![sigma; dimension],
            min_samples: dimension + 1,
            ridge: Ridge::default(),
            max_lookback: None,
        }
    }

    /// `sigma_i = frac * width_i`.
    pub fn from_widths(widths: &[f64], frac: f64) -> Self {
        Self {
            sigma: widths.iter().map(|w| w * frac).collect(),
            min_samples: widths.len() + 1,
            ridge: Ridge::default(),
            max_lookback: None,
        }
    }

    pub fn with_ridge(mut self, ridge: Ridge) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn dimension(&self) -> usize {
        self.sigma.len()
    }

    pub fn validate(&self) -> Result<(), GradientError> {
        let n = self.dimension();
        if n == 0 {
            return Err(GradientError::InvalidConfig("sigma must be non-empty".into()));
        }
        if self.sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(GradientError::InvalidConfig("sigma must be positive".into()));
        }
        if self.min_samples < n + 1 {
            return Err(GradientError::InvalidConfig(format!(
                "min_samples must be at least n + 1 = {}",
                n + 1
            )));
        }
        let r = match self.ridge {
            Ridge::Relative(r) | Ridge::Absolute(r) => r,
        };
        if !(r.is_finite() && r >= 0.0) {
            return Err(GradientError::InvalidConfig("ridge must be nonnegative".into()));
        }
        if self.max_lookback == Some(0) {
            return Err(GradientError::InvalidConfig("max_lookback must be positive".into()));
        }
        Ok(())
    }
}

struct Kernel {
    weights: Vec<f64>,
    beta_sum: f64,
}

fn kernel(archive: &EvaluationArchive, x: &[f64], cfg: &WlsConfig) -> Result<Kernel, GradientError> {
    let n = x.len();
    if n != archive.dimension() || n != cfg.dimension() {
        return Err(GradientError::DimensionMismatch {
            expected: archive.dimension(),
            actual: n,
        });
    }
    let log_norm =
        -0.5 * n as f64 * (2.0 * PI).ln() - 0.5 * cfg.sigma.iter().map(|s| s.ln()).sum::<f64>();
    let mut logs: Vec<f64> = archive
        .window(cfg.max_lookback)
        .map(|e| {
            let q: f64 = e
                .position
                .iter()
                .zip(x)
                .zip(&cfg.sigma)
                .map(|((v, xi), s)| (v - xi) * (v - xi) / s)
                .sum();
            log_norm - 0.5 * q
        })
        .collect();
    if logs.is_empty() {
        return Err(GradientError::InsufficientData {
            required: 1,
            available: 0,
        });
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(GradientError::DegenerateWeights);
    }
    let mut sum = 0.0;
    for l in logs.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logs.iter_mut() {
        *l /= sum;
    }
    Ok(Kernel {
        weights: logs,
        beta_sum: max.exp() * sum,
    })
}

/// Normalized Gaussian weights of the archived records around `x`.
///
/// The kernel covariance is `diag(cfg.sigma)`; weights are computed in log
/// space and shifted by their maximum before exponentiation.
pub fn gaussian_weights(
    archive: &EvaluationArchive,
    x: &[f64],
    cfg: &WlsConfig,
) -> Result<Vec<f64>, GradientError> {
    kernel(archive, x, cfg).map(|k| k.weights)
}

/// Regional gradient at `x` from the archive.
///
/// Solves `(dX' W dX + ridge I) g = dX' W df` with `dx_i = v_i - x` and
/// `df_i = f(v_i) - f_x`. A near-singular normal matrix yields an estimate
/// with `condition_ok == false` and a zero `g`.
pub fn wls_regional_gradient(
    archive: &EvaluationArchive,
    x: &[f64],
    f_x: f64,
    cfg: &WlsConfig,
) -> Result<GradientEstimate, GradientError> {
    let n = x.len();
    let available = archive.window(cfg.max_lookback).len();
    if available < cfg.min_samples {
        return Err(GradientError::InsufficientData {
            required: cfg.min_samples,
            available,
        });
    }
    let k = kernel(archive, x, cfg)?;

    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    let mut dx = vec![0.0; n];
    for (e, &w) in archive.window(cfg.max_lookback).zip(&k.weights) {
        if w == 0.0 {
            continue;
        }
        for (d, (v, xi)) in dx.iter_mut().zip(e.position.iter().zip(x)) {
            *d = v - xi;
        }
        let df = e.value - f_x;
        for i in 0..n {
            let wdi = w * dx[i];
            b[i] += wdi * df;
            for j in i..n {
                a[i * n + j] += wdi * dx[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            a[i * n + j] = a[j * n + i];
        }
    }
    let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
    let ridge = cfg.ridge.value(trace, n);
    for i in 0..n {
        a[i * n + i] += ridge;
    }

    let sol = linalg::solve(a, b, n);
    if !sol.is_well_conditioned(PIVOT_TOLERANCE) {
        return Ok(GradientEstimate::failed(n, k.beta_sum, available));
    }
    Ok(GradientEstimate {
        g: sol.x,
        effective_weight: k.beta_sum,
        condition_ok: true,
        samples_used: available,
    })
}
