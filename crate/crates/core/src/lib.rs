//! Dual-mode simulator for mobile ad hoc networks: the same scenario can run
//! under distributed reactive routing (`manet`) or centralized flow-table
//! control (`sdn`), producing comparable latency/throughput/delivery/overhead
//! metrics, plus a standalone cost/efficiency/capacity/risk model (`econ`).

pub mod config;
pub mod econ;
pub mod manet;
pub mod rng;
pub mod sdn;
pub mod sim;
pub mod topology;

pub use config::{parse_config, ScenarioConfig};
pub use sim::{aggregate, compare, run_scenario, ComparisonTable, MetricsReport};
pub use topology::{NodeId, Path, TopologySnapshot};
