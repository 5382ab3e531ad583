//! Reorder-point optimization of an inventory chain.

use serde::Serialize;

use super::HarnessError;
use crate::inventory::{simulate_chain, ChainObjective, ChainSpec, SimulationResult};
use crate::objective::Interval;
use crate::swarm::{run, PsoConfig, RunResult};

#[derive(Debug, Clone, Serialize)]
pub struct ChainOptimum {
    pub best_r: Vec<f64>,
    pub objective: f64,
    pub service_level: Vec<f64>,
    pub initial_r: Vec<f64>,
    pub initial_objective: f64,
    pub initial_service_level: Vec<f64>,
    pub iterations_done: usize,
    pub gbest_found_at: usize,
    pub evaluations: usize,
    #[serde(skip)]
    pub run: RunResult,
    #[serde(skip)]
    pub simulation: SimulationResult,
}

fn sim(chain: &ChainSpec, r: &[f64], seed: u64) -> Result<SimulationResult, HarnessError> {
    chain
        .with_reorder_points(r)
        .and_then(|c| simulate_chain(&c, seed))
        .map_err(|e| HarnessError::Runtime(e.to_string()))
}

/// Runs the swarm on the chain objective with common random numbers `seed`
/// and reports the rounded best reorder points next to the chain's own.
pub fn optimize_chain(
    chain: &ChainSpec,
    bounds: Vec<Interval>,
    pso: &PsoConfig,
    seed: u64,
) -> Result<ChainOptimum, HarnessError> {
    let f = ChainObjective::new(chain.clone(), bounds, seed).map_err(|e| HarnessError::Config(e.to_string()))?;
    let result = run(&f, pso).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let best_r: Vec<f64> = result.gbest_x.iter().map(|v| v.max(0.0).round()).collect();
    let initial_r: Vec<f64> = chain.warehouses.iter().map(|w| w.r).collect();
    let initial = sim(chain, &initial_r, seed)?;
    let best = sim(chain, &best_r, seed)?;
    Ok(ChainOptimum {
        objective: best.objective,
        service_level: best.service_level.clone(),
        best_r,
        initial_objective: initial.objective,
        initial_service_level: initial.service_level,
        initial_r,
        iterations_done: result.iterations_done,
        gbest_found_at: result.gbest_found_at,
        evaluations: result.evaluations,
        run: result,
        simulation: best,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridOptimum {
    pub best_r: Vec<f64>,
    pub objective: f64,
    pub evaluated: usize,
}

/// Exhaustive search over the Cartesian product of `axes`.
pub fn grid_search(chain: &ChainSpec, axes: &[Vec<f64>], seed: u64) -> Result<GridOptimum, HarnessError> {
    if axes.len() != chain.warehouses.len() || axes.iter().any(Vec::is_empty) {
        return Err(HarnessError::Config("one nonempty grid axis per warehouse is required".into()));
    }
    let mut idx = vec![0usize; axes.len()];
    let mut best = GridOptimum {
        best_r: Vec::new(),
        objective: f64::INFINITY,
        evaluated: 0,
    };
    loop {
        let r: Vec<f64> = idx.iter().zip(axes).map(|(i, a)| a[*i]).collect();
        let obj = sim(chain, &r, seed)?.objective;
        best.evaluated += 1;
        if obj < best.objective {
            best.objective = obj;
            best.best_r = r;
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(best);
            }
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
