//! Monte-Carlo sweeps over the gradient weight.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::histogram::mean_std;
use super::HarnessError;
use crate::objective::Objective;
use crate::rng::derive_seed;
use crate::swarm::{run, PsoConfig};

/// One finished run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawRun {
    pub objective: String,
    pub c3: f64,
    pub replicate: usize,
    pub seed: u64,
    pub gbest_f: f64,
    pub mean_pbest_f: f64,
    pub iterations_done: usize,
    pub gbest_found_at: usize,
    pub evaluations: usize,
}

/// Aggregates over the replicates of one weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub objective: String,
    pub c3: f64,
    pub mean_gbest: f64,
    pub std_gbest: f64,
    pub mean_of_mean_pbest: f64,
    pub mean_iters_total: f64,
    pub mean_iter_gbest_found: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    /// Grouped by weight, in weight order, then by replicate.
    pub raw: Vec<RawRun>,
}

impl SweepOutput {
    pub fn gbest_values(&self, c3_index: usize, runs: usize) -> Vec<f64> {
        self.raw[c3_index * runs..(c3_index + 1) * runs]
            .iter()
            .map(|r| r.gbest_f)
            .collect()
    }
}

/// Seed of replicate `rep` at weight index `wi`.
pub fn replicate_seed(master: u64, wi: usize, rep: usize) -> u64 {
    derive_seed(master, &[wi as u64, rep as u64])
}

/// Runs `mc_runs` replicates per weight. Results do not depend on the worker
/// count: every replicate has its own derived seed and rows are reduced in
/// replicate order.
pub fn run_sweep<O: Objective + ?Sized>(
    f: &O,
    name: &str,
    base: &PsoConfig,
    weights: &[f64],
    mc_runs: usize,
    master: u64,
) -> Result<SweepOutput, HarnessError> {
    let jobs: Vec<(usize, usize)> = (0..weights.len())
        .flat_map(|wi| (0..mc_runs).map(move |rep| (wi, rep)))
        .collect();
    let raw = jobs
        .par_iter()
        .map(|&(wi, rep)| {
            let seed = replicate_seed(master, wi, rep);
            let cfg = PsoConfig {
                c3: weights[wi],
                seed,
                ..base.clone()
            };
            let r = run(f, &cfg).map_err(|e| {
                HarnessError::Runtime(format!("{name} c3={} replicate {rep}: {e}", weights[wi]))
            })?;
            Ok(RawRun {
                objective: name.to_string(),
                c3: weights[wi],
                replicate: rep,
                seed,
                gbest_f: r.gbest_f,
                mean_pbest_f: r.mean_pbest_f,
                iterations_done: r.iterations_done,
                gbest_found_at: r.gbest_found_at,
                evaluations: r.evaluations,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let rows = raw
        .chunks(mc_runs)
        .map(|runs| {
            let n = runs.len() as f64;
            let gbest: Vec<f64> = runs.iter().map(|r| r.gbest_f).collect();
            let (mean_gbest, std_gbest) = mean_std(&gbest);
            SweepRow {
                objective: name.to_string(),
                c3: runs[0].c3,
                mean_gbest,
                std_gbest,
                mean_of_mean_pbest: runs.iter().map(|r| r.mean_pbest_f).sum::<f64>() / n,
                mean_iters_total: runs.iter().map(|r| r.iterations_done as f64).sum::<f64>() / n,
                mean_iter_gbest_found: runs.iter().map(|r| r.gbest_found_at as f64).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(SweepOutput { rows, raw })
}

pub const SWEEP_HEADER: &str =
    "objective,c3,mean_gbest,std_gbest,mean_of_mean_pbest,mean_iters_total,mean_iter_gbest_found";

/// Statistics with 6 significant digits.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.5e},{:.5e},{:.5e},{:.5e},{:.5e}",
            r.objective, r.c3, r.mean_gbest, r.std_gbest, r.mean_of_mean_pbest, r.mean_iters_total, r.mean_iter_gbest_found
        )?;
    }
    Ok(())
}

/// Full-precision per-run values.
pub fn write_raw_csv<W: Write>(runs: &[RawRun], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "objective,c3,replicate,seed,gbest_f,mean_pbest_f,iterations_done,gbest_found_at,evaluations"
    )?;
    for r in runs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.objective,
            r.c3,
            r.replicate,
            r.seed,
            r.gbest_f,
            r.mean_pbest_f,
            r.iterations_done,
            r.gbest_found_at,
            r.evaluations
        )?;
    }
    Ok(())
}
