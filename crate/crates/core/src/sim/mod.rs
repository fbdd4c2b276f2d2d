//! Simulation front door: run one scenario, run a seeded mode pair, or sweep
//! seeds in parallel.

pub mod engine;
pub mod metrics;

use std::io::Write;

pub use engine::{Engine, TrafficFlow};
pub use metrics::{
    aggregate, compare, AggregateError, AggregateReport, ComparisonRow, ComparisonTable,
    CompareError, Direction, MetricsReport,
};

use crate::config::{Mode, ScenarioConfig};

/// Executes one run to completion.
pub fn run_scenario(config: &ScenarioConfig) -> MetricsReport {
    Engine::new(config.clone()).run()
}

/// Same, streaming a line-delimited event log to `sink`.
pub fn run_scenario_with_events(config: &ScenarioConfig, sink: Box<dyn Write>) -> MetricsReport {
    let mut engine = Engine::new(config.clone());
    engine.set_event_log(sink);
    engine.run()
}

/// Runs the identical seeded scenario under both modes.
pub fn run_paired(config: &ScenarioConfig) -> (MetricsReport, MetricsReport) {
    let mut manet_cfg = config.clone();
    manet_cfg.mode = Mode::Manet;
    let mut sdn_cfg = config.clone();
    sdn_cfg.mode = Mode::Sdn;
    (run_scenario(&manet_cfg), run_scenario(&sdn_cfg))
}

/// Runs the scenario once per seed; runs share nothing, so they may execute
/// on worker threads. Results come back in seed order either way.
pub fn run_sweep(config: &ScenarioConfig, seeds: &[u64], parallel: bool) -> Vec<MetricsReport> {
    if !parallel || seeds.len() < 2 {
        return seeds
            .iter()
            .map(|&seed| {
                let mut cfg = config.clone();
                cfg.seed = seed;
                run_scenario(&cfg)
            })
            .collect();
    }
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(4)
        .min(seeds.len());
    let chunk = seeds.len().div_ceil(workers);
    let mut out: Vec<Option<MetricsReport>> = vec![None; seeds.len()];
    std::thread::scope(|scope| {
        for (slot, seed_chunk) in out.chunks_mut(chunk).zip(seeds.chunks(chunk)) {
            scope.spawn(move || {
                for (dst, &seed) in slot.iter_mut().zip(seed_chunk) {
                    let mut cfg = config.clone();
                    cfg.seed = seed;
                    *dst = Some(run_scenario(&cfg));
                }
            });
        }
    });
    out.into_iter().map(|r| r.unwrap()).collect()
}
