//! Distributed reactive routing, run independently at every node: route
//! discovery by request flooding with duplicate suppression, destination-only
//! replies installing forward and reverse entries, and error propagation
//! along precursor chains when a next hop disappears.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{path_cost, NodeId, Path, RouteError, TopologySnapshot};

/// Control-plane message kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MessageKind {
    Rreq,
    Rrep,
    Rerr,
    Hello,
}

/// One simulated control transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlMessage {
    pub kind: MessageKind,
    pub origin: NodeId,
    pub target: NodeId,
    pub rreq_id: Option<u64>,
    pub hop_count: u32,
    pub size_bytes: u64,
    /// Destinations reported unreachable (RERR only).
    pub unreachable: Vec<NodeId>,
}

/// Routing-table entry held at a single node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteEntry {
    pub destination: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub dest_sequence: u64,
    /// Absolute simulation time after which the entry is stale.
    pub expiry_ms: f64,
    /// Upstream neighbors using this entry; error reports travel to them.
    pub precursors: BTreeSet<NodeId>,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DiscoveryOutcome {
    Route(Path),
    Failure,
}

/// What one discovery attempt cost and produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryRecord {
    pub src: NodeId,
    pub dst: NodeId,
    /// Unique per (origin, discovery attempt).
    pub rreq_id: u64,
    pub t_start_ms: f64,
    pub t_end_ms: f64,
    pub control_messages: u64,
    pub control_bytes: u64,
    pub rreq_transmissions: u64,
    pub rrep_transmissions: u64,
    pub outcome: DiscoveryOutcome,
}

impl DiscoveryRecord {
    /// Discovery latency: request flood out plus reply back.
    pub fn discovery_ms(&self) -> f64 {
        self.t_end_ms - self.t_start_ms
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.outcome {
            DiscoveryOutcome::Route(p) => Some(p),
            DiscoveryOutcome::Failure => None,
        }
    }
}

/// An error report hop scheduled `arrival_offset_ms` after detection.
#[derive(Debug, Clone, PartialEq)]
pub struct RerrEvent {
    pub message: ControlMessage,
    pub arrival_offset_ms: f64,
}

/// Everything a link break changed: the relayed error reports plus the
/// destinations the detecting node itself lost.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkBreakOutcome {
    pub events: Vec<RerrEvent>,
    pub invalidated_at_detector: Vec<NodeId>,
}

/// Protocol constants. Control forwarding pays a realistic per-node
/// traversal cost on top of airtime; data packets do not go through here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManetParams {
    pub rreq_bytes: u64,
    pub rrep_bytes: u64,
    pub rerr_bytes: u64,
    pub hello_bytes: u64,
    pub control_processing_ms: f64,
    pub route_expiry_ms: f64,
}

impl Default for ManetParams {
    fn default() -> Self {
        ManetParams {
            rreq_bytes: 64,
            rrep_bytes: 64,
            rerr_bytes: 64,
            hello_bytes: 32,
            control_processing_ms: 40.0,
            route_expiry_ms: 3000.0,
        }
    }
}

fn hop_delay_ms(size_bytes: u64, capacity_bps: f64, processing_ms: f64) -> f64 {
    (size_bytes as f64 * 8.0) / capacity_bps * 1000.0 + processing_ms
}

/// Per-node reactive routing state for a whole scenario.
#[derive(Debug, Clone)]
pub struct ManetRouting {
    tables: Vec<BTreeMap<NodeId, RouteEntry>>,
    own_sequence: Vec<u64>,
    next_rreq_id: Vec<u64>,
    params: ManetParams,
}

impl ManetRouting {
    pub fn new(node_count: usize, params: ManetParams) -> Self {
        ManetRouting {
            tables: vec![BTreeMap::new(); node_count],
            own_sequence: vec![0; node_count],
            next_rreq_id: vec![0; node_count],
            params,
        }
    }

    pub fn params(&self) -> &ManetParams {
        &self.params
    }

    pub fn table(&self, node: NodeId) -> &BTreeMap<NodeId, RouteEntry> {
        &self.tables[node.index()]
    }

    /// Usable (valid, unexpired) entry toward `dst` at `node`.
    pub fn route(&self, node: NodeId, dst: NodeId, now_ms: f64) -> Option<&RouteEntry> {
        self.tables[node.index()]
            .get(&dst)
            .filter(|e| e.valid && e.expiry_ms > now_ms)
    }

    /// Data traffic keeps active routes alive.
    pub fn refresh(&mut self, node: NodeId, dst: NodeId, now_ms: f64) {
        if let Some(e) = self.tables[node.index()].get_mut(&dst) {
            if e.valid {
                e.expiry_ms = now_ms + self.params.route_expiry_ms;
            }
        }
    }

    pub fn invalidate(&mut self, node: NodeId, dst: NodeId) {
        if let Some(e) = self.tables[node.index()].get_mut(&dst) {
            e.valid = false;
        }
    }

    /// Installs `entry` at `node` if it is fresher (higher destination
    /// sequence) or equally fresh but shorter. Matching installs merge
    /// precursor sets.
    fn install(&mut self, node: NodeId, entry: RouteEntry) {
        let table = &mut self.tables[node.index()];
        match table.get_mut(&entry.destination) {
            Some(existing) => {
                let accept = !existing.valid
                    || entry.dest_sequence > existing.dest_sequence
                    || (entry.dest_sequence == existing.dest_sequence
                        && entry.hop_count < existing.hop_count);
                if accept {
                    let same_hop = existing.next_hop == entry.next_hop;
                    let mut merged = entry;
                    if same_hop {
                        merged
                            .precursors
                            .extend(existing.precursors.iter().copied());
                    }
                    *existing = merged;
                } else if existing.next_hop == entry.next_hop {
                    existing.precursors.extend(entry.precursors);
                    existing.expiry_ms = existing.expiry_ms.max(entry.expiry_ms);
                }
            }
            None => {
                table.insert(entry.destination, entry);
            }
        }
    }

    /// Floods a route request from `src` over the snapshot, simulating
    /// per-node duplicate suppression; if the destination is reached it
    /// replies along the reverse path and routes are installed at every
    /// node on it. The record counts every control transmission.
    pub fn discover_route(
        &mut self,
        src: NodeId,
        dst: NodeId,
        snapshot: &TopologySnapshot,
        now_ms: f64,
    ) -> DiscoveryRecord {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;

        let n = self.tables.len();
        self.own_sequence[src.index()] += 1;
        let rreq_id = self.next_rreq_id[src.index()];
        self.next_rreq_id[src.index()] += 1;

        #[derive(PartialEq)]
        struct Arrival(f64, NodeId, NodeId); // (time, parent, node)
        impl Eq for Arrival {}
        impl PartialOrd for Arrival {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Arrival {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                self.0
                    .partial_cmp(&other.0)
                    .unwrap()
                    .then(self.1.cmp(&other.1))
                    .then(self.2.cmp(&other.2))
            }
        }

        let mut best: Vec<Option<(f64, NodeId)>> = vec![None; n];
        let mut processed = vec![false; n];
        let mut heap = BinaryHeap::new();
        let mut rreq_tx = 0u64;
        let mut flood_end = now_ms;

        // The origin broadcasts even into an empty neighborhood.
        processed[src.index()] = true;
        rreq_tx += 1;
        for v in snapshot.neighbors(src) {
            let link = snapshot.live_link(src, v).unwrap();
            let t = now_ms
                + hop_delay_ms(
                    self.params.rreq_bytes,
                    link.capacity_bps,
                    self.params.control_processing_ms,
                );
            best[v.index()] = Some((t, src));
            heap.push(Reverse(Arrival(t, src, v)));
        }

        while let Some(Reverse(Arrival(t, parent, u))) = heap.pop() {
            if processed[u.index()] {
                continue;
            }
            match best[u.index()] {
                Some((bt, bp)) if (bt, bp) != (t, parent) => continue,
                _ => {}
            }
            processed[u.index()] = true;
            flood_end = flood_end.max(t);
            if u == dst {
                // Destination answers; it does not rebroadcast.
                continue;
            }
            rreq_tx += 1;
            for v in snapshot.neighbors(u) {
                if processed[v.index()] {
                    continue;
                }
                let link = snapshot.live_link(u, v).unwrap();
                let cand = t + hop_delay_ms(
                    self.params.rreq_bytes,
                    link.capacity_bps,
                    self.params.control_processing_ms,
                );
                let better = match best[v.index()] {
                    None => true,
                    Some((bt, bp)) => cand < bt || (cand == bt && u < bp),
                };
                if better {
                    best[v.index()] = Some((cand, u));
                    heap.push(Reverse(Arrival(cand, u, v)));
                }
            }
        }

        let rreq_bytes_total = rreq_tx * self.params.rreq_bytes;

        if best[dst.index()].is_none() {
            return DiscoveryRecord {
                src,
                dst,
                rreq_id,
                t_start_ms: now_ms,
                t_end_ms: flood_end,
                control_messages: rreq_tx,
                control_bytes: rreq_bytes_total,
                rreq_transmissions: rreq_tx,
                rrep_transmissions: 0,
                outcome: DiscoveryOutcome::Failure,
            };
        }

        // Reverse-path walk dst -> src gives the forward route.
        let mut hops = vec![dst];
        let mut cursor = dst;
        while cursor != src {
            let (_, parent) = best[cursor.index()].unwrap();
            hops.push(parent);
            cursor = parent;
        }
        hops.reverse();

        let reply_seq = self.own_sequence[dst.index()] + 1;
        self.own_sequence[dst.index()] = reply_seq;
        let origin_seq = self.own_sequence[src.index()];
        let k = hops.len() - 1;
        let reply_start = best[dst.index()].unwrap().0;

        // Walk the reply back, installing routes as it passes each node.
        let mut t_reply = reply_start;
        for i in (0..k).rev() {
            let (a, b) = (hops[i], hops[i + 1]);
            let link = snapshot.live_link(a, b).unwrap();
            t_reply += hop_delay_ms(
                self.params.rrep_bytes,
                link.capacity_bps,
                self.params.control_processing_ms,
            );
            // Forward entry toward dst at hops[i].
            self.install(
                hops[i],
                RouteEntry {
                    destination: dst,
                    next_hop: hops[i + 1],
                    hop_count: (k - i) as u32,
                    dest_sequence: reply_seq,
                    expiry_ms: t_reply + self.params.route_expiry_ms,
                    precursors: if i > 0 {
                        [hops[i - 1]].into()
                    } else {
                        BTreeSet::new()
                    },
                    valid: true,
                },
            );
            // Reverse entry toward src at hops[i + 1].
            self.install(
                hops[i + 1],
                RouteEntry {
                    destination: src,
                    next_hop: hops[i],
                    hop_count: (i + 1) as u32,
                    dest_sequence: origin_seq,
                    expiry_ms: t_reply + self.params.route_expiry_ms,
                    precursors: if i + 2 <= k {
                        [hops[i + 2]].into()
                    } else {
                        BTreeSet::new()
                    },
                    valid: true,
                },
            );
        }

        let rrep_tx = k as u64;
        let total_weight = hops
            .windows(2)
            .map(|w| snapshot.live_link(w[0], w[1]).unwrap().weight)
            .sum();
        DiscoveryRecord {
            src,
            dst,
            rreq_id,
            t_start_ms: now_ms,
            t_end_ms: t_reply,
            control_messages: rreq_tx + rrep_tx,
            control_bytes: rreq_bytes_total + rrep_tx * self.params.rrep_bytes,
            rreq_transmissions: rreq_tx,
            rrep_transmissions: rrep_tx,
            outcome: DiscoveryOutcome::Route(Path::new(hops, total_weight)),
        }
    }

    /// `node` lost its link to `broken_neighbor`: invalidates every route
    /// through it and relays error reports along precursor chains toward the
    /// sources still using those routes.
    pub fn handle_link_break(
        &mut self,
        node: NodeId,
        broken_neighbor: NodeId,
        snapshot: &TopologySnapshot,
    ) -> LinkBreakOutcome {
        let mut events = Vec::new();
        let mut invalidated_at_detector = Vec::new();

        // Affected destinations at the detecting node, with their upstreams.
        let mut frontier: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        {
            let table = &mut self.tables[node.index()];
            for entry in table.values_mut() {
                if entry.valid && entry.next_hop == broken_neighbor {
                    entry.valid = false;
                    invalidated_at_detector.push(entry.destination);
                    for &p in &entry.precursors {
                        frontier.entry(p).or_default().push(entry.destination);
                    }
                }
            }
        }

        // Breadth-first relay: (sender, target, dests, hops, offset).
        let mut queue: Vec<(NodeId, NodeId, Vec<NodeId>, u32, f64)> = frontier
            .into_iter()
            .map(|(target, dests)| (node, target, dests, 1, 0.0))
            .collect();

        while !queue.is_empty() {
            let mut next_queue = Vec::new();
            for (sender, target, mut dests, hop, offset) in queue {
                dests.sort_unstable();
                dests.dedup();
                let link = match snapshot.live_link(sender, target) {
                    Some(l) => l,
                    // Upstream link is gone too; the report is transmitted
                    // but never heard.
                    None => {
                        events.push(RerrEvent {
                            message: ControlMessage {
                                kind: MessageKind::Rerr,
                                origin: node,
                                target,
                                rreq_id: None,
                                hop_count: hop,
                                size_bytes: self.params.rerr_bytes,
                                unreachable: dests,
                            },
                            arrival_offset_ms: f64::INFINITY,
                        });
                        continue;
                    }
                };
                let arrival = offset
                    + hop_delay_ms(
                        self.params.rerr_bytes,
                        link.capacity_bps,
                        self.params.control_processing_ms,
                    );
                events.push(RerrEvent {
                    message: ControlMessage {
                        kind: MessageKind::Rerr,
                        origin: node,
                        target,
                        rreq_id: None,
                        hop_count: hop,
                        size_bytes: self.params.rerr_bytes,
                        unreachable: dests.clone(),
                    },
                    arrival_offset_ms: arrival,
                });

                // The target drops its matching entries and relays upstream.
                let mut upstream: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
                {
                    let table = &mut self.tables[target.index()];
                    for d in &dests {
                        if let Some(entry) = table.get_mut(d) {
                            if entry.valid && entry.next_hop == sender {
                                entry.valid = false;
                                for &p in &entry.precursors {
                                    upstream.entry(p).or_default().push(*d);
                                }
                            }
                        }
                    }
                }
                for (p, ds) in upstream {
                    next_queue.push((target, p, ds, hop + 1, arrival));
                }
            }
            queue = next_queue;
        }
        LinkBreakOutcome {
            events,
            invalidated_at_detector,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AvgPathCostError {
    #[error("no active routes")]
    NoActiveRoutes,
    #[error(transparent)]
    Invalid(#[from] RouteError),
}

/// Mean per-node path cost over the currently active routes. Absent (an
/// error, not zero) when no node holds a route.
pub fn avg_path_cost(
    active_routes: &[(NodeId, Path)],
    snapshot: &TopologySnapshot,
) -> Result<f64, AvgPathCostError> {
    if active_routes.is_empty() {
        return Err(AvgPathCostError::NoActiveRoutes);
    }
    let mut total = 0.0;
    for (_, path) in active_routes {
        total += path_cost(snapshot, path)?;
    }
    Ok(total / active_routes.len() as f64)
}
