//! Per-run counters and statistics, the paired-mode comparison table, and
//! multi-run aggregation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Mode;
use crate::econ;

/// Why packets were lost, by cause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DropBreakdown {
    pub dead_link: u64,
    pub queue_overflow: u64,
    pub ttl_expired: u64,
    pub no_route: u64,
}

impl DropBreakdown {
    pub fn total(&self) -> u64 {
        self.dead_link + self.queue_overflow + self.ttl_expired + self.no_route
    }
}

/// Control bytes by message kind; the two mode-specific halves never mix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ControlBreakdown {
    pub rreq: u64,
    pub rrep: u64,
    pub rerr: u64,
    pub hello: u64,
    pub packet_in: u64,
    pub flow_mod: u64,
    pub status_report: u64,
}

impl ControlBreakdown {
    pub fn total(&self) -> u64 {
        self.rreq
            + self.rrep
            + self.rerr
            + self.hello
            + self.packet_in
            + self.flow_mod
            + self.status_report
    }
}

/// Everything one run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: Mode,
    pub seed: u64,
    pub duration_ms: f64,
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub packets_dropped: u64,
    pub in_flight_at_end: u64,
    pub latency_mean_ms: f64,
    pub latency_p50_ms: f64,
    pub latency_p95_ms: f64,
    /// Delivered payload bits per second of simulated time.
    pub throughput_bps: f64,
    pub pdr: f64,
    pub control_bytes: u64,
    pub data_bytes: u64,
    /// control / (control + data), in bytes.
    pub overhead_ratio: f64,
    pub update_time_mean_ms: f64,
    pub update_time_p50_ms: f64,
    pub update_time_p95_ms: f64,
    pub update_count: u64,
    /// Delivered payload bits (throughput numerator).
    pub useful_data_bits: u64,
    /// useful / total bits, scaled by the configured optimization factor.
    pub efficiency: f64,
    pub drops: DropBreakdown,
    pub control_breakdown: ControlBreakdown,
}

impl MetricsReport {
    pub fn total_bits(&self) -> f64 {
        (self.control_bytes + self.data_bytes) as f64 * 8.0
    }
}

/// Nearest-rank percentile of an unsorted sample set.
pub fn percentile(samples: &[f64], q: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        0.0
    } else {
        samples.iter().sum::<f64>() / samples.len() as f64
    }
}

/// Expected direction for an SDN-vs-MANET metric row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    SdnLower,
    SdnHigher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub manet: f64,
    pub sdn: f64,
    pub expected: Direction,
    /// Strict inequality in the expected direction.
    pub direction_satisfied: bool,
}

/// Paired-run comparison: the four metric rows plus the derived
/// optimization factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub seed: u64,
    pub rows: Vec<ComparisonRow>,
    /// Goodput ratio sdn/manet; absent when the manet run delivered nothing.
    pub eta_opt_derived: Option<f64>,
    /// SDN efficiency recomputed with the derived factor.
    pub sdn_efficiency_derived: Option<f64>,
}

impl ComparisonTable {
    pub fn row(&self, metric: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    pub fn all_directions_satisfied(&self) -> bool {
        self.rows.iter().all(|r| r.direction_satisfied)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("compare needs one manet and one sdn report, got two {0} reports")]
    ModeMismatch(Mode),
    #[error("paired reports must share a seed (got {0} and {1})")]
    SeedMismatch(u64, u64),
}

/// Builds the directional comparison between a manet run and an sdn run of
/// the same seeded scenario. No row is forced: the table records what the
/// runs actually measured.
pub fn compare(manet: &MetricsReport, sdn: &MetricsReport) -> Result<ComparisonTable, CompareError> {
    if manet.mode == sdn.mode {
        return Err(CompareError::ModeMismatch(manet.mode));
    }
    let (manet, sdn) = if manet.mode == Mode::Manet {
        (manet, sdn)
    } else {
        (sdn, manet)
    };
    if manet.seed != sdn.seed {
        return Err(CompareError::SeedMismatch(manet.seed, sdn.seed));
    }

    let rows = vec![
        ComparisonRow {
            metric: "latency_ms".to_string(),
            manet: manet.latency_mean_ms,
            sdn: sdn.latency_mean_ms,
            expected: Direction::SdnLower,
            direction_satisfied: sdn.latency_mean_ms < manet.latency_mean_ms,
        },
        ComparisonRow {
            metric: "throughput_bps".to_string(),
            manet: manet.throughput_bps,
            sdn: sdn.throughput_bps,
            expected: Direction::SdnHigher,
            direction_satisfied: sdn.throughput_bps > manet.throughput_bps,
        },
        ComparisonRow {
            metric: "pdr".to_string(),
            manet: manet.pdr,
            sdn: sdn.pdr,
            expected: Direction::SdnHigher,
            direction_satisfied: sdn.pdr > manet.pdr,
        },
        ComparisonRow {
            metric: "overhead_ratio".to_string(),
            manet: manet.overhead_ratio,
            sdn: sdn.overhead_ratio,
            expected: Direction::SdnLower,
            direction_satisfied: sdn.overhead_ratio < manet.overhead_ratio,
        },
    ];

    let eta_opt_derived = (manet.throughput_bps > 0.0)
        .then(|| sdn.throughput_bps / manet.throughput_bps);
    let sdn_efficiency_derived = eta_opt_derived.and_then(|eta| {
        econ::efficiency_sdn(sdn.useful_data_bits as f64, sdn.total_bits(), eta).ok()
    });

    Ok(ComparisonTable {
        seed: manet.seed,
        rows,
        eta_opt_derived,
        sdn_efficiency_derived,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub metric: String,
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

/// Summary statistics over a set of same-mode runs; metric order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub mode: Mode,
    pub runs: usize,
    pub metrics: Vec<MetricStats>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("cannot aggregate zero reports")]
    EmptyInput,
    #[error("aggregate needs same-mode reports")]
    ModeMismatch,
}

/// Fixed aggregation columns, in output order.
pub const AGGREGATE_METRICS: &[&str] = &[
    "packets_sent",
    "packets_delivered",
    "packets_dropped",
    "in_flight_at_end",
    "latency_mean_ms",
    "latency_p50_ms",
    "latency_p95_ms",
    "throughput_bps",
    "pdr",
    "control_bytes",
    "data_bytes",
    "overhead_ratio",
    "update_time_mean_ms",
    "update_count",
    "efficiency",
];

pub fn metric_value(report: &MetricsReport, metric: &str) -> f64 {
    match metric {
        "packets_sent" => report.packets_sent as f64,
        "packets_delivered" => report.packets_delivered as f64,
        "packets_dropped" => report.packets_dropped as f64,
        "in_flight_at_end" => report.in_flight_at_end as f64,
        "latency_mean_ms" => report.latency_mean_ms,
        "latency_p50_ms" => report.latency_p50_ms,
        "latency_p95_ms" => report.latency_p95_ms,
        "throughput_bps" => report.throughput_bps,
        "pdr" => report.pdr,
        "control_bytes" => report.control_bytes as f64,
        "data_bytes" => report.data_bytes as f64,
        "overhead_ratio" => report.overhead_ratio,
        "update_time_mean_ms" => report.update_time_mean_ms,
        "update_count" => report.update_count as f64,
        "efficiency" => report.efficiency,
        other => panic!("unknown metric {other}"),
    }
}

/// Mean, population standard deviation, min and max per metric.
pub fn aggregate(reports: &[MetricsReport]) -> Result<AggregateReport, AggregateError> {
    let first = reports.first().ok_or(AggregateError::EmptyInput)?;
    if reports.iter().any(|r| r.mode != first.mode) {
        return Err(AggregateError::ModeMismatch);
    }
    let metrics = AGGREGATE_METRICS
        .iter()
        .map(|name| {
            let values: Vec<f64> = reports.iter().map(|r| metric_value(r, name)).collect();
            let mean = mean(&values);
            let variance =
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
            MetricStats {
                metric: name.to_string(),
                mean,
                stddev: variance.sqrt(),
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Ok(AggregateReport {
        mode: first.mode,
        runs: reports.len(),
        metrics,
    })
}
