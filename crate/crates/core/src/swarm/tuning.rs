//! Staged parameter tuning.
//!
//! 1. all weights start at zero;
//! 2. `c3` grows geometrically until the probe runs oscillate, then is divided by 10;
//! 3. the inertia weight `w` is raised in steps of 0.1 while the probe score improves;
//! 4. `c1` likewise;
//! 5. `c2 = 1.25 - c3`.
//!
//! gbest itself never worsens, so oscillation is measured on the mean
//! objective value of the particles' current positions: a probe oscillates
//! when that mean increases between consecutive iterations more often than
//! `oscillation_threshold` of the time.

use serde::{Deserialize, Serialize};

use super::{run, PsoConfig, SwarmError};
use crate::objective::Objective;
use crate::rng;

/// Sum of the social and gradient weights after tuning.
pub const SOCIAL_PLUS_GRADIENT: f64 = 1.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningOptions {
    pub probe_seeds: usize,
    pub probe_iters: usize,
    pub c3_start: f64,
    pub c3_factor: f64,
    pub c3_max: f64,
    pub oscillation_threshold: f64,
    pub step: f64,
    pub w_max: f64,
    pub c1_max: f64,
}

impl Default for TuningOptions {
    fn default() -> Self {
        Self {
            probe_seeds: 5,
            probe_iters: 100,
            c3_start: 0.01,
            c3_factor: 2.0,
            c3_max: 1000.0,
            oscillation_threshold: 0.2,
            step: 0.1,
            w_max: 1.0,
            c1_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningStage {
    Zero,
    GradientWeight,
    Inertia,
    Cognitive,
    Social,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningTrial {
    pub stage: TuningStage,
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Mean gbest over the probe runs.
    pub score: f64,
    /// Fraction of iterations where the swarm's mean value increased.
    pub oscillation: f64,
    pub oscillating: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningOutcome {
    pub config: PsoConfig,
    pub trials: Vec<TuningTrial>,
    pub oscillation_threshold: f64,
}

struct Probe<'a, O: ?Sized> {
    f: &'a O,
    base: &'a PsoConfig,
    opts: &'a TuningOptions,
    trials: Vec<TuningTrial>,
}

impl<O: Objective + ?Sized> Probe<'_, O> {
    fn eval(&mut self, stage: TuningStage, cfg: &PsoConfig) -> Result<TuningTrial, SwarmError> {
        let mut score = 0.0;
        let mut oscillation = 0.0;
        for s in 0..self.opts.probe_seeds {
            let probe = PsoConfig {
                seed: rng::derive_seed(self.base.seed, &[s as u64]),
                max_iters: self.opts.probe_iters,
                stall_iters: self.opts.probe_iters,
                ..cfg.clone()
            };
            let r = run(self.f, &probe)?;
            score += r.gbest_f;
            let rises = r
                .trace
                .windows(2)
                .filter(|w| w[1].mean_f > w[0].mean_f + 1e-12 * w[0].mean_f.abs())
                .count();
            oscillation += rises as f64 / (r.trace.len() - 1).max(1) as f64;
        }
        let k = self.opts.probe_seeds as f64;
        let oscillation = oscillation / k;
        let trial = TuningTrial {
            stage,
            w: cfg.w,
            c1: cfg.c1,
            c2: cfg.c2,
            c3: cfg.c3,
            score: score / k,
            oscillation,
            oscillating: oscillation > self.opts.oscillation_threshold,
        };
        self.trials.push(trial.clone());
        Ok(trial)
    }

    /// Raises one weight in `step` increments while the score keeps improving.
    fn climb(
        &mut self,
        stage: TuningStage,
        cfg: &mut PsoConfig,
        best: &mut f64,
        max: f64,
        set: fn(&mut PsoConfig, f64),
    ) -> Result<(), SwarmError> {
        let mut k = 1;
        loop {
            let value = (self.opts.step * k as f64 * 1e9).round() / 1e9;
            if value > max + 1e-12 {
                return Ok(());
            }
            let mut trial_cfg = cfg.clone();
            set(&mut trial_cfg, value);
            let t = self.eval(stage, &trial_cfg)?;
            if t.score < *best {
                *best = t.score;
                *cfg = trial_cfg;
                k += 1;
            } else {
                return Ok(());
            }
        }
    }
}

/// Runs the staged schedule on `f` starting from `base` (estimator, swarm size
/// and stopping rule are kept; the four weights are tuned).
pub fn tuning_procedure<O: Objective + ?Sized>(
    f: &O,
    base: &PsoConfig,
    opts: &TuningOptions,
) -> Result<TuningOutcome, SwarmError> {
    if opts.probe_seeds == 0 || opts.probe_iters == 0 {
        return Err(SwarmError::Config("tuning needs at least one probe seed and iteration".into()));
    }
    if !(opts.c3_start > 0.0 && opts.c3_factor > 1.0 && opts.step > 0.0) {
        return Err(SwarmError::Config("tuning steps must be positive and growing".into()));
    }
    let mut probe = Probe {
        f,
        base,
        opts,
        trials: Vec::new(),
    };

    let mut cfg = PsoConfig {
        w: 0.0,
        c1: 0.0,
        c2: 0.0,
        c3: 0.0,
        ..base.clone()
    };
    let zero = probe.eval(TuningStage::Zero, &cfg)?;

    let mut c3 = opts.c3_start;
    let mut stable = 0.0;
    let mut found = None;
    while c3 <= opts.c3_max {
        let t = probe.eval(TuningStage::GradientWeight, &PsoConfig { c3, ..cfg.clone() })?;
        if t.oscillating {
            found = Some(c3);
            break;
        }
        stable = c3;
        c3 *= opts.c3_factor;
    }
    cfg.c3 = found.map_or(stable, |c| c / 10.0).min(SOCIAL_PLUS_GRADIENT);
    let mut best = if cfg.c3 > 0.0 {
        probe.eval(TuningStage::GradientWeight, &cfg)?.score
    } else {
        zero.score
    };

    probe.climb(TuningStage::Inertia, &mut cfg, &mut best, opts.w_max, |c, v| c.w = v)?;
    probe.climb(TuningStage::Cognitive, &mut cfg, &mut best, opts.c1_max, |c, v| c.c1 = v)?;

    cfg.c2 = SOCIAL_PLUS_GRADIENT - cfg.c3;
    probe.eval(TuningStage::Social, &cfg)?;

    Ok(TuningOutcome {
        config: cfg,
        trials: probe.trials,
        oscillation_threshold: opts.oscillation_threshold,
    })
}
