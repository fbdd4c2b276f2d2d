//! Scenario configuration: one JSON document, defaults for every field,
//! unknown keys rejected, per-field validation diagnostics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::econ::{CapacityBook, CostBook, ResourcePool, VulnerabilityProfile};
use crate::sdn::PathObjective;
use crate::topology::WeightRule;

/// Which routing mode a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Manet,
    Sdn,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Manet => write!(f, "manet"),
            Mode::Sdn => write!(f, "sdn"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaConfig {
    pub width_m: f64,
    pub height_m: f64,
}

impl Default for AreaConfig {
    fn default() -> Self {
        AreaConfig {
            width_m: 1000.0,
            height_m: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub pause_ms: f64,
    pub tick_ms: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            speed_min_mps: 1.0,
            speed_max_mps: 10.0,
            pause_ms: 2000.0,
            tick_ms: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub capacity_bps: f64,
    pub queue_packets: usize,
    pub weight_rule: WeightRule,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            capacity_bps: 1_000_000.0,
            queue_packets: 50,
            weight_rule: WeightRule::Hop,
        }
    }
}

/// One explicitly configured traffic flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub src: u32,
    pub dst: u32,
    #[serde(default = "default_rate_pps")]
    pub rate_pps: f64,
    #[serde(default = "default_packet_bytes")]
    pub packet_bytes: u64,
    #[serde(default)]
    pub start_ms: f64,
    /// Defaults to duration minus the drain window.
    #[serde(default)]
    pub end_ms: Option<f64>,
}

fn default_rate_pps() -> f64 {
    4.0
}

fn default_packet_bytes() -> u64 {
    512
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomFlowsConfig {
    pub count: usize,
    pub rate_pps: f64,
    pub packet_bytes: u64,
}

impl Default for RandomFlowsConfig {
    fn default() -> Self {
        RandomFlowsConfig {
            count: 10,
            rate_pps: 4.0,
            packet_bytes: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// Explicit flows; used as-is when non-empty.
    pub flows: Vec<FlowConfig>,
    /// Random source/destination pairs drawn from the traffic stream when no
    /// explicit flows are given.
    pub random_flows: RandomFlowsConfig,
    /// Traffic stops this long before the end of the run so in-flight
    /// packets can drain.
    pub drain_ms: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            flows: Vec::new(),
            random_flows: RandomFlowsConfig::default(),
            drain_ms: 2000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    pub controller_compute_ms: f64,
    pub control_delay_ms: f64,
    /// Cadence at which nodes check and report neighbor-set changes.
    pub status_interval_ms: f64,
    pub hello_interval_ms: f64,
    /// Missed hellos before a neighbor is declared gone.
    pub hello_loss_threshold: u32,
    /// Per-hop processing charged to reactive-protocol control forwarding.
    pub aodv_processing_ms: f64,
    /// Per-hop processing charged to data forwarding.
    pub data_processing_ms: f64,
    pub route_expiry_ms: f64,
    pub flow_idle_timeout_ms: f64,
    pub drop_entry_expiry_ms: f64,
    pub discovery_retry_ms: f64,
    pub discovery_retries: u32,
    pub ttl_hops: u32,
    /// Packets buffered per flow while a route or flow entry is pending.
    pub pending_buffer_packets: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            controller_compute_ms: 5.0,
            control_delay_ms: 10.0,
            status_interval_ms: 100.0,
            hello_interval_ms: 1000.0,
            hello_loss_threshold: 2,
            aodv_processing_ms: 40.0,
            data_processing_ms: 1.0,
            route_expiry_ms: 3000.0,
            flow_idle_timeout_ms: 5000.0,
            drop_entry_expiry_ms: 1000.0,
            discovery_retry_ms: 500.0,
            discovery_retries: 2,
            ttl_hops: 32,
            pending_buffer_packets: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MessageBytesConfig {
    pub rreq: u64,
    pub rrep: u64,
    pub rerr: u64,
    pub hello: u64,
    pub packet_in: u64,
    pub flow_mod: u64,
    pub status_report: u64,
}

impl Default for MessageBytesConfig {
    fn default() -> Self {
        MessageBytesConfig {
            rreq: 64,
            rrep: 64,
            rerr: 64,
            hello: 32,
            packet_in: 128,
            flow_mod: 96,
            status_report: 48,
        }
    }
}

/// Scripted link up/down change applied at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEventConfig {
    pub at_ms: f64,
    pub a: u32,
    pub b: u32,
    pub up: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconConfig {
    pub cost_book: CostBook,
    pub capacity_book: CapacityBook,
    pub resource_pool: ResourcePool,
    pub vulnerabilities: VulnerabilityProfile,
    pub quarantined: Vec<u32>,
    /// Optimization factor; derived from paired-run goodput when absent.
    pub eta_opt: Option<f64>,
    pub useful_bits: Option<f64>,
    pub total_bits: Option<f64>,
    /// Node-count range [lo, hi] for the cost curves.
    pub n_range: [u64; 2],
}

impl Default for EconConfig {
    fn default() -> Self {
        EconConfig {
            cost_book: CostBook::default(),
            capacity_book: CapacityBook::default(),
            resource_pool: ResourcePool::default(),
            vulnerabilities: VulnerabilityProfile::default(),
            quarantined: Vec::new(),
            eta_opt: None,
            useful_bits: None,
            total_bits: None,
            n_range: [1, 50],
        }
    }
}

/// Complete description of one simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration_ms: f64,
    pub area: AreaConfig,
    pub node_count: usize,
    pub radio_range_m: f64,
    pub mobility: MobilityConfig,
    pub link: LinkConfig,
    /// Explicit node placement; random-uniform when absent.
    pub positions: Option<Vec<[f64; 2]>>,
    /// Per-node traffic-load weights; 1.0 when absent.
    pub node_weights: Option<Vec<f64>>,
    pub traffic: TrafficConfig,
    pub mode: Mode,
    pub timing: TimingConfig,
    pub message_bytes: MessageBytesConfig,
    pub path_objective: PathObjective,
    pub link_events: Vec<LinkEventConfig>,
    pub econ: EconConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            duration_ms: 300_000.0,
            area: AreaConfig::default(),
            node_count: 25,
            radio_range_m: 250.0,
            mobility: MobilityConfig::default(),
            link: LinkConfig::default(),
            positions: None,
            node_weights: None,
            traffic: TrafficConfig::default(),
            mode: Mode::Manet,
            timing: TimingConfig::default(),
            message_bytes: MessageBytesConfig::default(),
            path_objective: PathObjective::default(),
            link_events: Vec::new(),
            econ: EconConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
}

/// Parses and validates a scenario document. An empty document yields the
/// default scenario family.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let config = if text.trim().is_empty() {
        ScenarioConfig::default()
    } else {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path.is_empty() || path == "." {
                ConfigError::Parse(e.to_string())
            } else {
                ConfigError::Parse(format!("{path}: {}", e.inner()))
            }
        })?
    };
    config.validate()?;
    Ok(config)
}

impl ScenarioConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Non-fatal oddities worth telling the operator about.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = self.econ.cost_book.warnings(self.node_count);
        if let Some(eta) = self.econ.eta_opt {
            if eta < 1.0 {
                out.push(format!(
                    "econ.eta_opt: optimization factor {eta} is below 1; efficiency will shrink"
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors: Vec<FieldError> = Vec::new();
        let mut err = |field: &str, message: String| {
            errors.push(FieldError {
                field: field.to_string(),
                message,
            });
        };

        let positive = |v: f64| v.is_finite() && v > 0.0;
        let non_negative = |v: f64| v.is_finite() && v >= 0.0;

        if !positive(self.duration_ms) {
            err("duration_ms", format!("must be positive, got {}", self.duration_ms));
        }
        if self.node_count < 1 || self.node_count > 10_000 {
            err("node_count", format!("must be in 1..=10000, got {}", self.node_count));
        }
        if !positive(self.area.width_m) {
            err("area.width_m", format!("must be positive, got {}", self.area.width_m));
        }
        if !positive(self.area.height_m) {
            err("area.height_m", format!("must be positive, got {}", self.area.height_m));
        }
        if !positive(self.radio_range_m) {
            err("radio_range_m", format!("must be positive, got {}", self.radio_range_m));
        }

        let m = &self.mobility;
        if !non_negative(m.speed_min_mps) {
            err("mobility.speed_min_mps", format!("must be >= 0, got {}", m.speed_min_mps));
        }
        if !non_negative(m.speed_max_mps) || m.speed_max_mps < m.speed_min_mps {
            err(
                "mobility.speed_max_mps",
                format!("must be >= speed_min_mps, got {}", m.speed_max_mps),
            );
        }
        if !non_negative(m.pause_ms) {
            err("mobility.pause_ms", format!("must be >= 0, got {}", m.pause_ms));
        }
        if !positive(m.tick_ms) {
            err("mobility.tick_ms", format!("must be positive, got {}", m.tick_ms));
        }

        if !positive(self.link.capacity_bps) {
            err("link.capacity_bps", format!("must be positive, got {}", self.link.capacity_bps));
        }
        if self.link.queue_packets < 1 {
            err("link.queue_packets", "must be at least 1".to_string());
        }

        if let Some(positions) = &self.positions {
            if positions.len() != self.node_count {
                err(
                    "positions",
                    format!("expected {} entries, got {}", self.node_count, positions.len()),
                );
            }
            for (i, [x, y]) in positions.iter().enumerate() {
                let inside = x.is_finite()
                    && y.is_finite()
                    && (0.0..=self.area.width_m).contains(x)
                    && (0.0..=self.area.height_m).contains(y);
                if !inside {
                    err(&format!("positions[{i}]"), format!("({x}, {y}) outside the area"));
                }
            }
        }
        if let Some(weights) = &self.node_weights {
            if weights.len() != self.node_count {
                err(
                    "node_weights",
                    format!("expected {} entries, got {}", self.node_count, weights.len()),
                );
            }
            for (i, w) in weights.iter().enumerate() {
                if !non_negative(*w) {
                    err(&format!("node_weights[{i}]"), format!("must be >= 0, got {w}"));
                }
            }
        }

        if !non_negative(self.traffic.drain_ms) || self.traffic.drain_ms >= self.duration_ms {
            err(
                "traffic.drain_ms",
                format!("must be in [0, duration_ms), got {}", self.traffic.drain_ms),
            );
        }
        for (i, flow) in self.traffic.flows.iter().enumerate() {
            let fld = |name: &str| format!("traffic.flows[{i}].{name}");
            if flow.src as usize >= self.node_count {
                err(&fld("src"), format!("node {} does not exist", flow.src));
            }
            if flow.dst as usize >= self.node_count {
                err(&fld("dst"), format!("node {} does not exist", flow.dst));
            }
            if flow.src == flow.dst {
                err(&fld("dst"), "source and destination must differ".to_string());
            }
            if !positive(flow.rate_pps) {
                err(&fld("rate_pps"), format!("must be positive, got {}", flow.rate_pps));
            }
            if flow.packet_bytes == 0 {
                err(&fld("packet_bytes"), "must be at least 1".to_string());
            }
            if !non_negative(flow.start_ms) {
                err(&fld("start_ms"), format!("must be >= 0, got {}", flow.start_ms));
            }
            if let Some(end) = flow.end_ms {
                if !(end.is_finite() && end > flow.start_ms) {
                    err(&fld("end_ms"), format!("must exceed start_ms, got {end}"));
                }
            }
        }
        let rf = &self.traffic.random_flows;
        if self.traffic.flows.is_empty() && rf.count > 0 {
            if self.node_count < 2 {
                err("traffic.random_flows.count", "needs at least 2 nodes".to_string());
            }
            if !positive(rf.rate_pps) {
                err("traffic.random_flows.rate_pps", format!("must be positive, got {}", rf.rate_pps));
            }
            if rf.packet_bytes == 0 {
                err("traffic.random_flows.packet_bytes", "must be at least 1".to_string());
            }
        }

        let t = &self.timing;
        for (name, value, strict) in [
            ("timing.controller_compute_ms", t.controller_compute_ms, false),
            ("timing.control_delay_ms", t.control_delay_ms, false),
            ("timing.status_interval_ms", t.status_interval_ms, true),
            ("timing.hello_interval_ms", t.hello_interval_ms, true),
            ("timing.aodv_processing_ms", t.aodv_processing_ms, false),
            ("timing.data_processing_ms", t.data_processing_ms, false),
            ("timing.route_expiry_ms", t.route_expiry_ms, true),
            ("timing.flow_idle_timeout_ms", t.flow_idle_timeout_ms, true),
            ("timing.drop_entry_expiry_ms", t.drop_entry_expiry_ms, true),
            ("timing.discovery_retry_ms", t.discovery_retry_ms, true),
        ] {
            let ok = if strict { positive(value) } else { non_negative(value) };
            if !ok {
                err(name, format!("invalid value {value}"));
            }
        }
        if t.hello_loss_threshold == 0 {
            err("timing.hello_loss_threshold", "must be at least 1".to_string());
        }
        if t.ttl_hops == 0 {
            err("timing.ttl_hops", "must be at least 1".to_string());
        }
        if t.pending_buffer_packets == 0 {
            err("timing.pending_buffer_packets", "must be at least 1".to_string());
        }

        let mb = &self.message_bytes;
        for (name, value) in [
            ("message_bytes.rreq", mb.rreq),
            ("message_bytes.rrep", mb.rrep),
            ("message_bytes.rerr", mb.rerr),
            ("message_bytes.hello", mb.hello),
            ("message_bytes.packet_in", mb.packet_in),
            ("message_bytes.flow_mod", mb.flow_mod),
            ("message_bytes.status_report", mb.status_report),
        ] {
            if value == 0 {
                err(name, "must be at least 1".to_string());
            }
        }

        for (i, ev) in self.link_events.iter().enumerate() {
            let fld = |name: &str| format!("link_events[{i}].{name}");
            if !non_negative(ev.at_ms) {
                err(&fld("at_ms"), format!("must be >= 0, got {}", ev.at_ms));
            }
            if ev.a as usize >= self.node_count {
                err(&fld("a"), format!("node {} does not exist", ev.a));
            }
            if ev.b as usize >= self.node_count {
                err(&fld("b"), format!("node {} does not exist", ev.b));
            }
            if ev.a == ev.b {
                err(&fld("b"), "endpoints must differ".to_string());
            }
        }

        let e = &self.econ;
        for (i, v) in e.vulnerabilities.entries.iter().enumerate() {
            if !(0.0..=1.0).contains(&v.probability) {
                err(
                    &format!("econ.vulnerabilities[{i}].probability"),
                    format!("must be in [0, 1], got {}", v.probability),
                );
            }
            if !non_negative(v.impact) {
                err(
                    &format!("econ.vulnerabilities[{i}].impact"),
                    format!("must be >= 0, got {}", v.impact),
                );
            }
        }
        if !positive(e.resource_pool.bandwidth_total_bps) {
            err(
                "econ.resource_pool.bandwidth_total_bps",
                format!("must be positive, got {}", e.resource_pool.bandwidth_total_bps),
            );
        }
        if !positive(e.resource_pool.power_total_w) {
            err(
                "econ.resource_pool.power_total_w",
                format!("must be positive, got {}", e.resource_pool.power_total_w),
            );
        }
        for (i, d) in e.resource_pool.demands.iter().enumerate() {
            if !non_negative(d.bandwidth_bps) || !non_negative(d.power_w) {
                err(
                    &format!("econ.resource_pool.demands[{i}]"),
                    "demands must be >= 0".to_string(),
                );
            }
        }
        if e.n_range[0] < 1 || e.n_range[0] > e.n_range[1] {
            err("econ.n_range", format!("must satisfy 1 <= lo <= hi, got {:?}", e.n_range));
        }
        if let Some(eta) = e.eta_opt {
            if !positive(eta) {
                err("econ.eta_opt", format!("must be positive, got {eta}"));
            }
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }
}
