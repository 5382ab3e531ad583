//! Particle swarm optimization augmented with regional gradients.
//!
//! The swarm keeps every evaluation it performs in an [`EvaluationArchive`].
//! Each particle estimates a local gradient by weighted least squares over
//! that archive (Gaussian weights centred on the particle) and uses it as an
//! extra descent term in its velocity update. No additional objective
//! evaluations are needed for the estimate, which is what makes the method
//! practical on noisy and simulation-based objectives.
//!
//! Modules:
//!
//! * [`objective`] - objective abstraction and the benchmark functions.
//! * [`gradient`] - evaluation archive, the WLS regional estimator and the
//!   finite-difference / evolutionary-gradient-search baselines.
//! * [`swarm`] - the PSO engine and the parameter tuning helper.
//! * [`inventory`] - Monte-Carlo (R, Q) inventory chain simulator and its
//!   reorder-point cost objective.
//! * [`harness`] - sweeps, chain optimization, histogram data and the CLI.

pub mod gradient;
pub mod harness;
pub mod inventory;
pub mod objective;
pub mod rng;
pub mod swarm;

pub use gradient::{EvaluationArchive, GradientEstimate, WlsConfig};
pub use objective::{Benchmark, Evaluation, Objective, ObjectiveSpec};
pub use swarm::{Estimator, PsoConfig, RunResult};
