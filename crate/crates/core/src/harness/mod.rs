//! Experiment orchestration: gradient-weight sweeps, chain optimization,
//! estimator diagnostics and the command-line front end.

pub mod chain_opt;
pub mod cli;
pub mod config;
pub mod gradcheck;
pub mod histogram;
pub mod sweep;

use thiserror::Error;

pub use chain_opt::{grid_search, optimize_chain, ChainOptimum, GridOptimum};
pub use config::{GradcheckSection, Overrides, RunConfig, SweepSection};
pub use gradcheck::{gradcheck, local_archive, sample_ball, GradcheckRow};
pub use histogram::{histogram_gbest, mean_std, Bin, Histogram};
pub use sweep::{replicate_seed, run_sweep, RawRun, SweepOutput, SweepRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad input; exit code 1.
    #[error("config error: {0}")]
    Config(String),
    /// Failure while running; exit code 2.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Runtime(_) => 2,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}
