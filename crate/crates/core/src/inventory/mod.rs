//! Monte-Carlo simulation of (R, Q) inventory chains.
//!
//! Each warehouse follows a weekly continuous-review policy with lost sales
//! and at most one order in flight. Warehouses supplied by another warehouse
//! place their replenishment orders as demand on that supplier. The reorder
//! point cost objective adds a hinge penalty for every warehouse whose
//! simulated service level falls below its minimum.

mod analytic;
mod chain;
mod demand;
mod io;

use thiserror::Error;

pub use analytic::{analytic_service_level, classic_kpis, lead_time_distribution, reorder_point, Kpis, Pmf};
pub use chain::{
    chain_objective, simulate_chain, step_week, ChainObjective, ChainSpec, Flow, SimulationResult,
    WarehouseSpec, WarehouseState, WeekOutcome,
};
pub use demand::{sample_demand, DemandModel};
pub use io::{
    load_chain_json, load_consumption_csv, parse_chain_json, parse_consumption, resolve_csv_demands,
    write_kpi_json, write_stocks_csv, KpiSummary, WarehouseKpi,
};

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("invalid chain: {0}")]
    InvalidSpec(String),
    #[error("topology: {0}")]
    Topology(String),
    #[error("{path}: line {line}: {msg}")]
    Ingest { path: String, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Config { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
