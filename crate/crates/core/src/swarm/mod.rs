//! The particle swarm engine.
//!
//! Classic global-best PSO with an optional gradient term in the velocity
//! update. The gradient is subtracted (descent for minimization) and comes
//! from whichever [`Estimator`] the config selects; with `c3 == 0` or
//! [`Estimator::None`] the engine is plain PSO and consumes exactly the same
//! random draws.

mod config;
mod engine;
mod tuning;

use thiserror::Error;

use crate::gradient::{ArchiveError, GradientError};
use crate::objective::ObjectiveError;

pub use config::{Estimator, PsoConfig};
pub use engine::{
    draw_coefficients, init_swarm, position_update, run, run_with_state, step, velocity_update,
    write_trace_csv, Particle, RunResult, SwarmState, TraceRow,
};
pub use tuning::{tuning_procedure, TuningOptions, TuningOutcome, TuningStage, TuningTrial};

#[derive(Debug, Error)]
pub enum SwarmError {
    #[error("invalid PSO config: {0}")]
    Config(String),
    #[error("particle {particle} at iteration {iteration}: {source}")]
    Objective {
        particle: usize,
        iteration: usize,
        #[source]
        source: ObjectiveError,
    },
    #[error("particle {particle} at iteration {iteration}: {source}")]
    Gradient {
        particle: usize,
        iteration: usize,
        #[source]
        source: GradientError,
    },
    #[error(transparent)]
    Archive(#[from] ArchiveError),
}
