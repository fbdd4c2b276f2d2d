//! Deterministic discrete-event loop driving mobility, traffic, and either
//! routing mode, with full packet and control-byte accounting.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Mode, ScenarioConfig};
use crate::manet::{DiscoveryOutcome, DiscoveryRecord, ManetParams, ManetRouting};
use crate::rng::{stream, Stream};
use crate::sdn::{
    Controller, FlowAction, FlowMatch, FlowMod, FlowTable, ReconfigRecord, SdnTiming,
};
use crate::sim::metrics::{percentile, ControlBreakdown, DropBreakdown, MetricsReport};
use crate::topology::{
    build_links, link_key, Area, MobilityParams, NodeId, NodeState, Point, TopologySnapshot,
};

/// One constant-rate traffic stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficFlow {
    pub id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub rate_pps: f64,
    pub packet_bytes: u64,
    pub start_ms: f64,
    pub end_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Packet {
    id: u64,
    flow: usize,
    src: NodeId,
    dst: NodeId,
    size_bytes: u64,
    created_ms: f64,
    hops: u32,
}

#[derive(Debug, Clone, PartialEq)]
enum ComputeJob {
    PacketIn {
        src: NodeId,
        dst: NodeId,
        at_node: NodeId,
        arrived_ms: f64,
    },
    LinkFailures {
        links: Vec<(NodeId, NodeId)>,
        report_arrival_ms: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum EventKind {
    MobilityTick,
    LinkCheck,
    HelloTick,
    TrafficStart(usize),
    TrafficStop(usize),
    PacketSend {
        flow: usize,
    },
    PacketArrive {
        packet: Packet,
        from: NodeId,
        at: NodeId,
    },
    LinkScript(usize),
    RrepArrive {
        src: NodeId,
        dst: NodeId,
        discovery_ms: f64,
        propagation_ms: f64,
    },
    RerrArrive {
        target: NodeId,
        dests: Vec<NodeId>,
        propagation_ms: f64,
    },
    DiscoveryRetry {
        src: NodeId,
        dst: NodeId,
    },
    StatusArrive {
        node: NodeId,
        neighbors: Vec<(NodeId, f64)>,
    },
    ControllerCompute(ComputeJob),
    FlowModArrive {
        node: NodeId,
        mods: Vec<FlowMod>,
    },
}

struct QueuedEvent {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for QueuedEvent {}
impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Times are finite; (time, sequence) is a total order.
        self.time
            .partial_cmp(&other.time)
            .unwrap()
            .then(self.seq.cmp(&other.seq))
    }
}

/// FIFO transmit queue of one directed link.
#[derive(Debug, Clone, Default)]
struct LinkQueue {
    free_at_ms: f64,
    waiting_starts: VecDeque<f64>,
}

impl LinkQueue {
    /// Returns (start, completion) or None when the waiting room is full.
    fn enqueue(&mut self, now_ms: f64, airtime_ms: f64, cap: usize) -> Option<(f64, f64)> {
        while let Some(&front) = self.waiting_starts.front() {
            if front <= now_ms {
                self.waiting_starts.pop_front();
            } else {
                break;
            }
        }
        if self.waiting_starts.len() >= cap {
            return None;
        }
        let start = now_ms.max(self.free_at_ms);
        self.free_at_ms = start + airtime_ms;
        if start > now_ms {
            self.waiting_starts.push_back(start);
        }
        Some((start, start + airtime_ms))
    }
}

enum TransmitResult {
    Sent { start_ms: f64 },
    DeadLink,
    QueueFull,
}

#[derive(Debug, Clone, PartialEq)]
enum PendState {
    /// Flood dispatched; a reply or retry timer is in flight.
    Discovering { attempt: u32, propagation_ms: f64 },
    /// A break was detected downstream; discovery starts when the error
    /// report reaches the source.
    AwaitingRerr,
    /// Recent attempts all failed; drop traffic until the hold expires.
    HoldDown { until_ms: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct PendingRoute {
    state: PendState,
    buffered: VecDeque<Packet>,
}

/// Components of the next update-time sample, completed by the first data
/// packet forwarded on the fresh route.
#[derive(Debug, Clone, Copy, PartialEq)]
struct UpdateWait {
    discovery_ms: f64,
    propagation_ms: f64,
    rrep_at_ms: f64,
}

/// A full simulation run. Construct with a validated config, call `run`,
/// then inspect state if needed.
pub struct Engine {
    config: ScenarioConfig,
    flows: Vec<TrafficFlow>,
    topo: TopologySnapshot,
    forced_down: BTreeSet<(NodeId, NodeId)>,
    link_death_ms: BTreeMap<(NodeId, NodeId), f64>,
    queue: BinaryHeap<Reverse<QueuedEvent>>,
    seq: u64,
    mobility_rng: rand_chacha::ChaCha8Rng,
    link_queues: BTreeMap<(NodeId, NodeId), LinkQueue>,

    // Reactive-routing state.
    routing: Option<ManetRouting>,
    last_heard_ms: Vec<BTreeMap<NodeId, f64>>,
    pending_routes: BTreeMap<(NodeId, NodeId), PendingRoute>,
    update_waits: BTreeMap<(NodeId, NodeId), UpdateWait>,
    discovery_records: Vec<DiscoveryRecord>,

    // Controller state.
    controller: Option<Controller>,
    tables: Vec<FlowTable>,
    node_reported: Vec<BTreeSet<NodeId>>,
    prev_view: BTreeSet<(NodeId, NodeId)>,
    pending_packet_in: BTreeSet<(NodeId, FlowMatch)>,
    sdn_buffers: BTreeMap<(NodeId, FlowMatch), VecDeque<Packet>>,
    reconfig_records: Vec<ReconfigRecord>,
    status_reports_sent: u64,

    // Accounting.
    next_packet_id: u64,
    packets_sent: u64,
    packets_delivered: u64,
    drops: DropBreakdown,
    control: ControlBreakdown,
    data_bytes: u64,
    useful_bits: u64,
    latency_samples: Vec<f64>,
    update_samples: Vec<f64>,

    event_log: Option<Box<dyn Write>>,
}

impl Engine {
    pub fn new(config: ScenarioConfig) -> Self {
        let n = config.node_count;
        let mut mobility_rng = stream(config.seed, Stream::Mobility);
        let mut traffic_rng = stream(config.seed, Stream::Traffic);
        let mut control_rng = stream(config.seed, Stream::Control);

        // Node placement, then initial legs, all from the mobility stream in
        // node order.
        use rand::Rng;
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let position = match &config.positions {
                Some(p) => Point::new(p[i][0], p[i][1]),
                None => Point::new(
                    mobility_rng.random_range(0.0..=config.area.width_m),
                    mobility_rng.random_range(0.0..=config.area.height_m),
                ),
            };
            let mut node = NodeState::new(NodeId(i as u32), position, config.radio_range_m);
            if let Some(weights) = &config.node_weights {
                node.node_weight = weights[i];
            }
            nodes.push(node);
        }
        let mobile = config.mobility.speed_max_mps > 0.0;
        if mobile {
            for node in &mut nodes {
                node.waypoint = Point::new(
                    mobility_rng.random_range(0.0..=config.area.width_m),
                    mobility_rng.random_range(0.0..=config.area.height_m),
                );
                node.speed_mps = if config.mobility.speed_max_mps > config.mobility.speed_min_mps {
                    mobility_rng
                        .random_range(config.mobility.speed_min_mps..=config.mobility.speed_max_mps)
                } else {
                    config.mobility.speed_min_mps
                };
            }
        }

        let links = build_links(&nodes, config.link.weight_rule, config.link.capacity_bps);
        let mut topo = TopologySnapshot::new(nodes);
        topo.set_links(links);

        // Traffic: explicit flows as configured, otherwise random pairs with
        // deterministic start jitter.
        let default_end = config.duration_ms - config.traffic.drain_ms;
        let mut flows = Vec::new();
        if !config.traffic.flows.is_empty() {
            for (id, f) in config.traffic.flows.iter().enumerate() {
                flows.push(TrafficFlow {
                    id,
                    src: NodeId(f.src),
                    dst: NodeId(f.dst),
                    rate_pps: f.rate_pps,
                    packet_bytes: f.packet_bytes,
                    start_ms: f.start_ms,
                    end_ms: f.end_ms.unwrap_or(default_end),
                });
            }
        } else {
            let rf = config.traffic.random_flows;
            for id in 0..rf.count {
                let src = NodeId(traffic_rng.random_range(0..n as u32));
                let dst = loop {
                    let d = NodeId(traffic_rng.random_range(0..n as u32));
                    if d != src {
                        break d;
                    }
                };
                // Grace offset keeps cold-start setup out of the first tick.
                let start_ms = 1000.0 + control_rng.random_range(0.0..1000.0);
                flows.push(TrafficFlow {
                    id,
                    src,
                    dst,
                    rate_pps: rf.rate_pps,
                    packet_bytes: rf.packet_bytes,
                    start_ms,
                    end_ms: default_end,
                });
            }
        }

        let manet_params = ManetParams {
            rreq_bytes: config.message_bytes.rreq,
            rrep_bytes: config.message_bytes.rrep,
            rerr_bytes: config.message_bytes.rerr,
            hello_bytes: config.message_bytes.hello,
            control_processing_ms: config.timing.aodv_processing_ms,
            route_expiry_ms: config.timing.route_expiry_ms,
        };
        let sdn_timing = SdnTiming {
            compute_ms: config.timing.controller_compute_ms,
            control_delay_ms: config.timing.control_delay_ms,
            flow_idle_timeout_ms: config.timing.flow_idle_timeout_ms,
            drop_entry_expiry_ms: config.timing.drop_entry_expiry_ms,
        };

        let (routing, controller, tables) = match config.mode {
            Mode::Manet => (Some(ManetRouting::new(n, manet_params)), None, Vec::new()),
            Mode::Sdn => {
                let mut c = Controller::new(n, sdn_timing, config.path_objective);
                c.set_node_weights(topo.nodes.iter().map(|nd| nd.node_weight).collect());
                let tables = (0..n).map(|i| FlowTable::new(NodeId(i as u32))).collect();
                (None, Some(c), tables)
            }
        };

        let mut engine = Engine {
            flows,
            topo,
            forced_down: BTreeSet::new(),
            link_death_ms: BTreeMap::new(),
            queue: BinaryHeap::new(),
            seq: 0,
            mobility_rng,
            link_queues: BTreeMap::new(),
            routing,
            last_heard_ms: vec![BTreeMap::new(); n],
            pending_routes: BTreeMap::new(),
            update_waits: BTreeMap::new(),
            discovery_records: Vec::new(),
            controller,
            tables,
            node_reported: vec![BTreeSet::new(); n],
            prev_view: BTreeSet::new(),
            pending_packet_in: BTreeSet::new(),
            sdn_buffers: BTreeMap::new(),
            reconfig_records: Vec::new(),
            status_reports_sent: 0,
            next_packet_id: 0,
            packets_sent: 0,
            packets_delivered: 0,
            drops: DropBreakdown::default(),
            control: ControlBreakdown::default(),
            data_bytes: 0,
            useful_bits: 0,
            latency_samples: Vec::new(),
            update_samples: Vec::new(),
            event_log: None,
            config,
        };
        engine.schedule_initial();
        engine
    }

    pub fn set_event_log(&mut self, sink: Box<dyn Write>) {
        self.event_log = Some(sink);
    }

    pub fn topology(&self) -> &TopologySnapshot {
        &self.topo
    }

    pub fn flow_table(&self, node: NodeId) -> Option<&FlowTable> {
        self.tables.get(node.index())
    }

    pub fn routing(&self) -> Option<&ManetRouting> {
        self.routing.as_ref()
    }

    pub fn discovery_records(&self) -> &[DiscoveryRecord] {
        &self.discovery_records
    }

    pub fn reconfig_records(&self) -> &[ReconfigRecord] {
        &self.reconfig_records
    }

    pub fn update_samples(&self) -> &[f64] {
        &self.update_samples
    }

    pub fn status_reports_sent(&self) -> u64 {
        self.status_reports_sent
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Reverse(QueuedEvent { time, seq, kind }));
    }

    fn schedule_initial(&mut self) {
        let duration = self.config.duration_ms;
        let tick = self.config.mobility.tick_ms;
        if tick <= duration {
            self.schedule(tick, EventKind::MobilityTick);
        }
        match self.config.mode {
            Mode::Sdn => self.schedule(0.0, EventKind::LinkCheck),
            Mode::Manet => {
                let hello = self.config.timing.hello_interval_ms;
                if hello <= duration {
                    self.schedule(hello, EventKind::HelloTick);
                }
            }
        }
        for i in 0..self.flows.len() {
            let flow = self.flows[i];
            if flow.start_ms < flow.end_ms && flow.start_ms <= duration {
                self.schedule(flow.start_ms, EventKind::TrafficStart(i));
                self.schedule(flow.end_ms.min(duration), EventKind::TrafficStop(i));
            }
        }
        for i in 0..self.config.link_events.len() {
            let at = self.config.link_events[i].at_ms;
            if at <= duration {
                self.schedule(at, EventKind::LinkScript(i));
            }
        }
    }

    fn log(&mut self, time: f64, seq: u64, kind: &str, detail: serde_json::Value) {
        if let Some(sink) = &mut self.event_log {
            let mut line = json!({"t": time, "seq": seq, "kind": kind});
            if let (Some(obj), Some(extra)) = (line.as_object_mut(), detail.as_object()) {
                for (k, v) in extra {
                    obj.insert(k.clone(), v.clone());
                }
            }
            let _ = writeln!(sink, "{line}");
        }
    }

    /// Runs the event loop to the configured duration and builds the report.
    pub fn run(&mut self) -> MetricsReport {
        let duration = self.config.duration_ms;
        while let Some(Reverse(head)) = self.queue.peek() {
            if head.time > duration {
                break;
            }
            let Reverse(event) = self.queue.pop().unwrap();
            self.dispatch(event);
        }
        self.build_report()
    }

    fn dispatch(&mut self, event: QueuedEvent) {
        let t = event.time;
        let seq = event.seq;
        match event.kind {
            EventKind::MobilityTick => self.on_mobility_tick(t, seq),
            EventKind::LinkCheck => self.on_link_check(t, seq),
            EventKind::HelloTick => self.on_hello_tick(t, seq),
            EventKind::TrafficStart(f) => {
                self.log(t, seq, "TrafficStart", json!({"flow": f}));
                self.generate_packet(f, t);
            }
            EventKind::TrafficStop(f) => {
                self.log(t, seq, "TrafficStop", json!({"flow": f}));
            }
            EventKind::PacketSend { flow } => self.generate_packet(flow, t),
            EventKind::PacketArrive { packet, from, at } => {
                self.on_packet_arrive(packet, from, at, t, seq)
            }
            EventKind::LinkScript(i) => self.on_link_script(i, t, seq),
            EventKind::RrepArrive {
                src,
                dst,
                discovery_ms,
                propagation_ms,
            } => self.on_rrep_arrive(src, dst, discovery_ms, propagation_ms, t, seq),
            EventKind::RerrArrive {
                target,
                dests,
                propagation_ms,
            } => self.on_rerr_arrive(target, dests, propagation_ms, t, seq),
            EventKind::DiscoveryRetry { src, dst } => self.on_discovery_retry(src, dst, t),
            EventKind::StatusArrive { node, neighbors } => {
                self.on_status_arrive(node, neighbors, t, seq)
            }
            EventKind::ControllerCompute(job) => self.on_controller_compute(job, t, seq),
            EventKind::FlowModArrive { node, mods } => self.on_flow_mods(node, mods, t, seq),
        }
    }

    // ---- topology events ----

    fn live_link_set(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.topo
            .links
            .values()
            .filter(|l| l.up)
            .map(|l| (l.a, l.b))
            .collect()
    }

    fn apply_forced_down(&mut self) {
        let pairs: Vec<(NodeId, NodeId)> = self.forced_down.iter().copied().collect();
        for (a, b) in pairs {
            self.topo.set_link_up(a, b, false);
        }
        self.topo.refresh_degrees();
    }

    fn record_link_transitions(&mut self, prev: &BTreeSet<(NodeId, NodeId)>, t: f64) {
        let now_live = self.live_link_set();
        for pair in prev.difference(&now_live) {
            self.link_death_ms.insert(*pair, t);
        }
        for pair in now_live.difference(prev) {
            self.link_death_ms.remove(pair);
        }
    }

    fn on_mobility_tick(&mut self, t: f64, seq: u64) {
        let prev = self.live_link_set();
        let area = Area {
            width_m: self.config.area.width_m,
            height_m: self.config.area.height_m,
        };
        let params = MobilityParams {
            speed_min_mps: self.config.mobility.speed_min_mps,
            speed_max_mps: self.config.mobility.speed_max_mps,
            pause_ms: self.config.mobility.pause_ms,
        };
        self.topo = crate::topology::step_mobility(
            &self.topo,
            self.config.mobility.tick_ms,
            &area,
            &params,
            self.config.link.weight_rule,
            self.config.link.capacity_bps,
            &mut self.mobility_rng,
        );
        self.apply_forced_down();
        self.record_link_transitions(&prev, t);
        let changed = prev.symmetric_difference(&self.live_link_set()).count();
        self.log(t, seq, "MobilityTick", json!({"links_changed": changed}));

        let next = t + self.config.mobility.tick_ms;
        if next <= self.config.duration_ms {
            self.schedule(next, EventKind::MobilityTick);
        }
    }

    fn on_link_script(&mut self, index: usize, t: f64, seq: u64) {
        let ev = self.config.link_events[index];
        let pair = link_key(NodeId(ev.a), NodeId(ev.b));
        let prev = self.live_link_set();
        if ev.up {
            self.forced_down.remove(&pair);
            self.topo.set_link_up(pair.0, pair.1, true);
        } else {
            self.forced_down.insert(pair);
            self.topo.set_link_up(pair.0, pair.1, false);
        }
        self.topo.refresh_degrees();
        self.record_link_transitions(&prev, t);
        self.log(
            t,
            seq,
            "MobilityTick",
            json!({"link_event": {"a": ev.a, "b": ev.b, "up": ev.up}}),
        );
    }

    // ---- traffic ----

    fn generate_packet(&mut self, flow_idx: usize, t: f64) {
        let flow = self.flows[flow_idx];
        let packet = Packet {
            id: self.next_packet_id,
            flow: flow_idx,
            src: flow.src,
            dst: flow.dst,
            size_bytes: flow.packet_bytes,
            created_ms: t,
            hops: 0,
        };
        self.next_packet_id += 1;
        self.packets_sent += 1;
        let seq = self.seq;
        self.log(
            t,
            seq,
            "PacketSend",
            json!({"packet": packet.id, "flow": flow_idx, "src": flow.src.0, "dst": flow.dst.0}),
        );
        self.forward_data(flow.src, packet, t);

        let next = t + 1000.0 / flow.rate_pps;
        if next < flow.end_ms && next <= self.config.duration_ms {
            self.schedule(next, EventKind::PacketSend { flow: flow_idx });
        }
    }

    fn flow_active(&self, src: NodeId, dst: NodeId, t: f64) -> bool {
        self.flows
            .iter()
            .any(|f| f.src == src && f.dst == dst && f.start_ms <= t && t < f.end_ms)
    }

    fn on_packet_arrive(&mut self, packet: Packet, from: NodeId, at: NodeId, t: f64, seq: u64) {
        if self.config.mode == Mode::Manet {
            self.last_heard_ms[at.index()].insert(from, t);
        }
        if at == packet.dst {
            let latency = t - packet.created_ms;
            self.packets_delivered += 1;
            self.useful_bits += packet.size_bytes * 8;
            self.latency_samples.push(latency);
            self.log(
                t,
                seq,
                "PacketArrive",
                json!({
                    "packet": packet.id, "at": at.0, "hops": packet.hops,
                    "delivered": true, "latency_ms": latency
                }),
            );
        } else {
            self.log(
                t,
                seq,
                "PacketArrive",
                json!({"packet": packet.id, "at": at.0, "hops": packet.hops}),
            );
            self.forward_data(at, packet, t);
        }
    }

    fn drop_packet(&mut self, packet: &Packet, at: NodeId, cause: &str, t: f64) {
        match cause {
            "dead_link" => self.drops.dead_link += 1,
            "queue_overflow" => self.drops.queue_overflow += 1,
            "ttl_expired" => self.drops.ttl_expired += 1,
            _ => self.drops.no_route += 1,
        }
        let seq = self.seq;
        self.log(
            t,
            seq,
            "PacketArrive",
            json!({"packet": packet.id, "at": at.0, "dropped": cause}),
        );
    }

    fn transmit(&mut self, from: NodeId, to: NodeId, packet: &Packet, t: f64) -> TransmitResult {
        let link = match self.topo.live_link(from, to) {
            Some(l) => *l,
            None => return TransmitResult::DeadLink,
        };
        let airtime = packet.size_bytes as f64 * 8.0 / link.capacity_bps * 1000.0;
        let cap = self.config.link.queue_packets;
        let slot = self
            .link_queues
            .entry((from, to))
            .or_default()
            .enqueue(t, airtime, cap);
        match slot {
            Some((start, complete)) => {
                self.data_bytes += packet.size_bytes;
                let mut moved = packet.clone();
                moved.hops += 1;
                self.schedule(
                    complete + self.config.timing.data_processing_ms,
                    EventKind::PacketArrive {
                        packet: moved,
                        from,
                        at: to,
                    },
                );
                TransmitResult::Sent { start_ms: start }
            }
            None => TransmitResult::QueueFull,
        }
    }

    fn forward_data(&mut self, at: NodeId, packet: Packet, t: f64) {
        if packet.hops >= self.config.timing.ttl_hops {
            self.drop_packet(&packet, at, "ttl_expired", t);
            return;
        }
        match self.config.mode {
            Mode::Manet => self.forward_manet(at, packet, t),
            Mode::Sdn => self.forward_sdn(at, packet, t),
        }
    }

    // ---- reactive-routing data plane ----

    fn forward_manet(&mut self, at: NodeId, packet: Packet, t: f64) {
        let routing = self.routing.as_mut().unwrap();
        let next = routing.route(at, packet.dst, t).map(|e| e.next_hop);
        match next {
            Some(next_hop) => match self.transmit(at, next_hop, &packet, t) {
                TransmitResult::Sent { start_ms } => {
                    self.routing.as_mut().unwrap().refresh(at, packet.dst, t);
                    if at == packet.src {
                        self.complete_update_sample(packet.src, packet.dst, start_ms, &packet);
                    }
                }
                TransmitResult::QueueFull => self.drop_packet(&packet, at, "queue_overflow", t),
                TransmitResult::DeadLink => {
                    self.drop_packet(&packet, at, "dead_link", t);
                    self.process_link_break(at, next_hop, t);
                }
            },
            None => {
                if at == packet.src {
                    self.buffer_or_discover(packet, t);
                } else {
                    self.drop_packet(&packet, at, "no_route", t);
                }
            }
        }
    }

    fn complete_update_sample(&mut self, src: NodeId, dst: NodeId, start_ms: f64, packet: &Packet) {
        if let Some(wait) = self.update_waits.remove(&(src, dst)) {
            let reconfiguration = start_ms - wait.rrep_at_ms;
            let total = wait.discovery_ms + wait.propagation_ms + reconfiguration;
            self.update_samples.push(total);
            let seq = self.seq;
            self.log(
                start_ms,
                seq,
                "PacketSend",
                json!({
                    "packet": packet.id, "resumed": true,
                    "update_discovery_ms": wait.discovery_ms,
                    "update_propagation_ms": wait.propagation_ms,
                    "update_reconfiguration_ms": reconfiguration,
                    "update_total_ms": total
                }),
            );
        }
    }

    fn buffer_or_discover(&mut self, packet: Packet, t: f64) {
        let key = (packet.src, packet.dst);
        let cap = self.config.timing.pending_buffer_packets;
        // Expired hold-downs clear lazily on the next send.
        if let Some(pending) = self.pending_routes.get(&key) {
            if let PendState::HoldDown { until_ms } = pending.state {
                if t < until_ms {
                    self.drop_packet(&packet, packet.src, "no_route", t);
                    return;
                }
                self.pending_routes.remove(&key);
            }
        }
        match self.pending_routes.get_mut(&key) {
            Some(pending) => {
                if pending.buffered.len() >= cap {
                    self.drop_packet(&packet, packet.src, "queue_overflow", t);
                } else {
                    pending.buffered.push_back(packet);
                }
            }
            None => {
                let mut buffered = VecDeque::new();
                buffered.push_back(packet);
                self.pending_routes.insert(
                    key,
                    PendingRoute {
                        state: PendState::Discovering {
                            attempt: 0,
                            propagation_ms: 0.0,
                        },
                        buffered,
                    },
                );
                self.start_discovery(key.0, key.1, t);
            }
        }
    }

    /// Runs one flood attempt and schedules its completion or retry.
    fn start_discovery(&mut self, src: NodeId, dst: NodeId, t: f64) {
        let routing = self.routing.as_mut().unwrap();
        let record = routing.discover_route(src, dst, &self.topo, t);
        self.control.rreq += record.rreq_transmissions * routing.params().rreq_bytes;
        self.control.rrep += record.rrep_transmissions * routing.params().rrep_bytes;
        let propagation_ms = match self.pending_routes.get(&(src, dst)) {
            Some(PendingRoute {
                state: PendState::Discovering { propagation_ms, .. },
                ..
            }) => *propagation_ms,
            _ => 0.0,
        };
        match &record.outcome {
            DiscoveryOutcome::Route(_) => {
                self.schedule(
                    record.t_end_ms,
                    EventKind::RrepArrive {
                        src,
                        dst,
                        discovery_ms: record.discovery_ms(),
                        propagation_ms,
                    },
                );
            }
            DiscoveryOutcome::Failure => {
                self.schedule(
                    t + self.config.timing.discovery_retry_ms,
                    EventKind::DiscoveryRetry { src, dst },
                );
            }
        }
        self.discovery_records.push(record);
    }

    fn on_rrep_arrive(
        &mut self,
        src: NodeId,
        dst: NodeId,
        discovery_ms: f64,
        propagation_ms: f64,
        t: f64,
        seq: u64,
    ) {
        self.log(
            t,
            seq,
            "PacketArrive",
            json!({"control": "rrep", "at": src.0, "dst": dst.0, "discovery_ms": discovery_ms}),
        );
        // Freshen liveness along the installed path: the reply just used it.
        if let Some(routing) = &self.routing {
            if let Some(entry) = routing.route(src, dst, t) {
                let mut cursor = src;
                let mut hop = entry.next_hop;
                loop {
                    self.last_heard_ms[cursor.index()].insert(hop, t);
                    self.last_heard_ms[hop.index()].insert(cursor, t);
                    if hop == dst {
                        break;
                    }
                    match self.routing.as_ref().unwrap().route(hop, dst, t) {
                        Some(e) => {
                            cursor = hop;
                            hop = e.next_hop;
                        }
                        None => break,
                    }
                }
            }
        }
        self.update_waits.insert(
            (src, dst),
            UpdateWait {
                discovery_ms,
                propagation_ms,
                rrep_at_ms: t,
            },
        );
        if let Some(pending) = self.pending_routes.remove(&(src, dst)) {
            for packet in pending.buffered {
                self.forward_data(src, packet, t);
            }
        }
    }

    fn on_discovery_retry(&mut self, src: NodeId, dst: NodeId, t: f64) {
        let key = (src, dst);
        let Some(pending) = self.pending_routes.get_mut(&key) else {
            return;
        };
        let PendState::Discovering { attempt, .. } = &mut pending.state else {
            return;
        };
        *attempt += 1;
        if *attempt > self.config.timing.discovery_retries {
            let hold = self.config.timing.discovery_retry_ms * 4.0;
            let buffered = std::mem::take(&mut pending.buffered);
            pending.state = PendState::HoldDown { until_ms: t + hold };
            for packet in buffered {
                self.drop_packet(&packet, src, "no_route", t);
            }
        } else {
            self.start_discovery(src, dst, t);
        }
    }

    /// Shared break handling for data-plane and hello-timeout detection.
    fn process_link_break(&mut self, node: NodeId, broken: NodeId, t: f64) {
        let outcome = self
            .routing
            .as_mut()
            .unwrap()
            .handle_link_break(node, broken, &self.topo);
        let rerr_bytes = self.routing.as_ref().unwrap().params().rerr_bytes;
        for ev in &outcome.events {
            self.control.rerr += rerr_bytes;
            let seq = self.seq;
            self.log(
                t,
                seq,
                "PacketSend",
                json!({
                    "control": "rerr", "target": ev.message.target.0,
                    "lost": !ev.arrival_offset_ms.is_finite()
                }),
            );
            if ev.arrival_offset_ms.is_finite() {
                // Sources behind this report hold their traffic until it
                // lands, then rediscover.
                let target = ev.message.target;
                for &d in &ev.message.unreachable {
                    if self.flow_active(target, d, t)
                        && !self.pending_routes.contains_key(&(target, d))
                    {
                        self.pending_routes.insert(
                            (target, d),
                            PendingRoute {
                                state: PendState::AwaitingRerr,
                                buffered: VecDeque::new(),
                            },
                        );
                    }
                }
                self.schedule(
                    t + ev.arrival_offset_ms,
                    EventKind::RerrArrive {
                        target,
                        dests: ev.message.unreachable.clone(),
                        propagation_ms: ev.arrival_offset_ms,
                    },
                );
            }
        }
        // The detector may itself source affected flows; it learns instantly.
        for d in outcome.invalidated_at_detector {
            if self.flow_active(node, d, t) && !self.pending_routes.contains_key(&(node, d)) {
                self.pending_routes.insert(
                    (node, d),
                    PendingRoute {
                        state: PendState::Discovering {
                            attempt: 0,
                            propagation_ms: 0.0,
                        },
                        buffered: VecDeque::new(),
                    },
                );
                self.start_discovery(node, d, t);
            }
        }
    }

    fn on_rerr_arrive(
        &mut self,
        target: NodeId,
        dests: Vec<NodeId>,
        propagation_ms: f64,
        t: f64,
        seq: u64,
    ) {
        self.log(
            t,
            seq,
            "PacketArrive",
            json!({
                "control": "rerr", "at": target.0,
                "dests": dests.iter().map(|d| d.0).collect::<Vec<_>>(),
                "propagation_ms": propagation_ms
            }),
        );
        for d in dests {
            if !self.flow_active(target, d, t) {
                continue;
            }
            let key = (target, d);
            let waiting = matches!(
                self.pending_routes.get(&key).map(|p| &p.state),
                Some(PendState::AwaitingRerr) | None
            );
            if waiting {
                self.pending_routes
                    .entry(key)
                    .or_insert_with(|| PendingRoute {
                        state: PendState::AwaitingRerr,
                        buffered: VecDeque::new(),
                    })
                    .state = PendState::Discovering {
                    attempt: 0,
                    propagation_ms,
                };
                self.start_discovery(target, d, t);
            }
        }
    }

    fn on_hello_tick(&mut self, t: f64, seq: u64) {
        let n = self.config.node_count as u64;
        let hello_bytes = self.config.message_bytes.hello;
        self.control.hello += n * hello_bytes;
        self.log(t, seq, "HelloTick", json!({"broadcasts": n}));

        let live = self.live_link_set();
        for &(a, b) in &live {
            self.last_heard_ms[a.index()].insert(b, t);
            self.last_heard_ms[b.index()].insert(a, t);
        }

        // Idle routes via silent neighbors are torn down like data-plane
        // breaks.
        let threshold =
            self.config.timing.hello_loss_threshold as f64 * self.config.timing.hello_interval_ms;
        let mut breaks: Vec<(NodeId, NodeId)> = Vec::new();
        if let Some(routing) = &self.routing {
            for i in 0..self.config.node_count {
                let node = NodeId(i as u32);
                let mut silent: Vec<NodeId> = routing
                    .table(node)
                    .values()
                    .filter(|e| e.valid && e.expiry_ms > t)
                    .map(|e| e.next_hop)
                    .filter(|w| {
                        let heard = self.last_heard_ms[i].get(w).copied();
                        match heard {
                            Some(h) => t - h > threshold,
                            None => t > threshold,
                        }
                    })
                    .collect();
                silent.sort_unstable();
                silent.dedup();
                breaks.extend(silent.into_iter().map(|w| (node, w)));
            }
        }
        for (node, w) in breaks {
            self.process_link_break(node, w, t);
        }

        let next = t + self.config.timing.hello_interval_ms;
        if next <= self.config.duration_ms {
            self.schedule(next, EventKind::HelloTick);
        }
    }

    // ---- controller data plane ----

    fn forward_sdn(&mut self, at: NodeId, packet: Packet, t: f64) {
        let idle = self.config.timing.flow_idle_timeout_ms;
        let table = &mut self.tables[at.index()];
        table.sweep(t, idle);
        let action = table
            .match_flow(packet.src, packet.dst)
            .map(|e| e.action);
        match action {
            Some(FlowAction::Forward(next_hop)) => {
                self.tables[at.index()].touch(packet.src, packet.dst, t);
                match self.transmit(at, next_hop, &packet, t) {
                    TransmitResult::Sent { .. } => {}
                    TransmitResult::QueueFull => {
                        self.drop_packet(&packet, at, "queue_overflow", t)
                    }
                    // Stale entry toward a dead link: the loss stands until
                    // a status report reaches the controller.
                    TransmitResult::DeadLink => self.drop_packet(&packet, at, "dead_link", t),
                }
            }
            Some(FlowAction::Drop) => self.drop_packet(&packet, at, "no_route", t),
            None => {
                let matches = FlowMatch {
                    src: packet.src,
                    dst: packet.dst,
                };
                let key = (at, matches);
                let buffer = self.sdn_buffers.entry(key).or_default();
                if buffer.len() >= self.config.timing.pending_buffer_packets {
                    self.drop_packet(&packet, at, "queue_overflow", t);
                } else {
                    buffer.push_back(packet);
                }
                if self.pending_packet_in.insert(key) {
                    self.control.packet_in += self.config.message_bytes.packet_in;
                    let arrived = t + self.config.timing.control_delay_ms;
                    self.schedule(
                        arrived + self.config.timing.controller_compute_ms,
                        EventKind::ControllerCompute(ComputeJob::PacketIn {
                            src: matches.src,
                            dst: matches.dst,
                            at_node: at,
                            arrived_ms: arrived,
                        }),
                    );
                }
            }
        }
    }

    fn on_link_check(&mut self, t: f64, seq: u64) {
        let mut reports = 0;
        for i in 0..self.config.node_count {
            let node = NodeId(i as u32);
            let current: BTreeSet<NodeId> = self.topo.neighbors(node).into_iter().collect();
            if current != self.node_reported[i] {
                self.node_reported[i] = current.clone();
                let neighbors: Vec<(NodeId, f64)> = current
                    .iter()
                    .map(|&v| (v, self.topo.live_link(node, v).unwrap().weight))
                    .collect();
                self.control.status_report += self.config.message_bytes.status_report;
                self.status_reports_sent += 1;
                reports += 1;
                self.schedule(
                    t + self.config.timing.control_delay_ms,
                    EventKind::StatusArrive { node, neighbors },
                );
            }
        }
        if reports > 0 {
            self.log(t, seq, "LinkCheck", json!({"reports": reports}));
        }
        let next = t + self.config.timing.status_interval_ms;
        if next <= self.config.duration_ms {
            self.schedule(next, EventKind::LinkCheck);
        }
    }

    fn on_status_arrive(&mut self, node: NodeId, neighbors: Vec<(NodeId, f64)>, t: f64, seq: u64) {
        self.log(t, seq, "StatusReport", json!({"node": node.0}));
        let controller = self.controller.as_mut().unwrap();
        controller.apply_report(node, neighbors);
        let new_view: BTreeSet<(NodeId, NodeId)> = controller
            .view_links_snapshot()
            .into_iter()
            .map(|(a, b, _)| (a, b))
            .collect();
        let vanished: Vec<(NodeId, NodeId)> =
            self.prev_view.difference(&new_view).copied().collect();
        self.prev_view = new_view;
        if !vanished.is_empty() {
            self.schedule(
                t + self.config.timing.controller_compute_ms,
                EventKind::ControllerCompute(ComputeJob::LinkFailures {
                    links: vanished,
                    report_arrival_ms: t,
                }),
            );
        }
    }

    fn dispatch_mods(&mut self, mods: Vec<FlowMod>, t_compute_done: f64) {
        if mods.is_empty() {
            return;
        }
        self.control.flow_mod += self.config.message_bytes.flow_mod * mods.len() as u64;
        let mut by_node: BTreeMap<NodeId, Vec<FlowMod>> = BTreeMap::new();
        for m in mods {
            by_node.entry(m.node()).or_default().push(m);
        }
        for (node, mods) in by_node {
            self.schedule(
                t_compute_done + self.config.timing.control_delay_ms,
                EventKind::FlowModArrive { node, mods },
            );
        }
    }

    fn on_controller_compute(&mut self, job: ComputeJob, t: f64, seq: u64) {
        match job {
            ComputeJob::PacketIn {
                src,
                dst,
                at_node,
                arrived_ms,
            } => {
                let resp =
                    self.controller
                        .as_mut()
                        .unwrap()
                        .packet_in(src, dst, at_node, arrived_ms);
                self.log(
                    t,
                    seq,
                    "ControllerCompute",
                    json!({
                        "job": "packet_in", "src": src.0, "dst": dst.0,
                        "routed": resp.path.is_some()
                    }),
                );
                self.dispatch_mods(resp.mods, t);
            }
            ComputeJob::LinkFailures {
                links,
                report_arrival_ms,
            } => {
                for link in links {
                    let death = self.link_death_ms.get(&link).copied();
                    let t_detection = death.map(|d| report_arrival_ms - d).unwrap_or(0.0);
                    let resp = self.controller.as_mut().unwrap().handle_link_failure(
                        link,
                        t_detection,
                        report_arrival_ms,
                    );
                    self.log(
                        t,
                        seq,
                        "ControllerCompute",
                        json!({
                            "job": "link_failure", "a": link.0 .0, "b": link.1 .0,
                            "flows_rerouted": resp.reroutes.len()
                        }),
                    );
                    if !resp.reroutes.is_empty() {
                        self.update_samples.push(resp.record.total_ms);
                        self.reconfig_records.push(resp.record);
                    }
                    self.dispatch_mods(resp.mods, t);
                }
            }
        }
    }

    fn on_flow_mods(&mut self, node: NodeId, mods: Vec<FlowMod>, t: f64, seq: u64) {
        let mut installed: Vec<FlowMatch> = Vec::new();
        let mut removed = 0;
        for m in mods {
            match m {
                FlowMod::Install { entry, .. } => {
                    installed.push(entry.matches);
                    self.tables[node.index()].install(entry);
                }
                FlowMod::Remove { matches, .. } => {
                    removed += 1;
                    self.tables[node.index()].remove(matches);
                }
            }
        }
        self.log(
            t,
            seq,
            "FlowModArrive",
            json!({"node": node.0, "installs": installed.len(), "removes": removed}),
        );
        for matches in installed {
            self.pending_packet_in.remove(&(node, matches));
            if let Some(buffer) = self.sdn_buffers.remove(&(node, matches)) {
                for packet in buffer {
                    self.forward_data(node, packet, t);
                }
            }
        }
    }

    // ---- report ----

    fn build_report(&mut self) -> MetricsReport {
        // Whatever is still buffered or scheduled to arrive is in flight.
        let mut in_flight = 0u64;
        for pending in self.pending_routes.values() {
            in_flight += pending.buffered.len() as u64;
        }
        for buffer in self.sdn_buffers.values() {
            in_flight += buffer.len() as u64;
        }
        for Reverse(ev) in self.queue.iter() {
            if matches!(ev.kind, EventKind::PacketArrive { .. }) {
                in_flight += 1;
            }
        }

        let dropped = self.drops.total();
        let control_bytes = self.control.total();
        let duration_s = self.config.duration_ms / 1000.0;
        let pdr = if self.packets_sent > 0 {
            self.packets_delivered as f64 / self.packets_sent as f64
        } else {
            0.0
        };
        let total_transport = control_bytes + self.data_bytes;
        let overhead = if total_transport > 0 {
            control_bytes as f64 / total_transport as f64
        } else {
            0.0
        };
        let eta = self.config.econ.eta_opt.unwrap_or(1.0);
        let efficiency = if total_transport > 0 {
            crate::econ::efficiency_sdn(
                self.useful_bits as f64,
                total_transport as f64 * 8.0,
                eta,
            )
            .unwrap_or(0.0)
        } else {
            0.0
        };

        MetricsReport {
            mode: self.config.mode,
            seed: self.config.seed,
            duration_ms: self.config.duration_ms,
            packets_sent: self.packets_sent,
            packets_delivered: self.packets_delivered,
            packets_dropped: dropped,
            in_flight_at_end: in_flight,
            latency_mean_ms: crate::sim::metrics::mean(&self.latency_samples),
            latency_p50_ms: percentile(&self.latency_samples, 0.50),
            latency_p95_ms: percentile(&self.latency_samples, 0.95),
            throughput_bps: self.useful_bits as f64 / duration_s,
            pdr,
            control_bytes,
            data_bytes: self.data_bytes,
            overhead_ratio: overhead,
            update_time_mean_ms: crate::sim::metrics::mean(&self.update_samples),
            update_time_p50_ms: percentile(&self.update_samples, 0.50),
            update_time_p95_ms: percentile(&self.update_samples, 0.95),
            update_count: self.update_samples.len() as u64,
            useful_data_bits: self.useful_bits,
            efficiency,
            drops: self.drops,
            control_breakdown: self.control,
        }
    }
}
