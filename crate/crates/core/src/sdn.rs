//! Centralized control plane: a controller with a report-built global view
//! that computes paths, installs and revokes flow entries, reconfigures
//! around link failures, and quarantines compromised nodes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{CostGraph, NodeId, Path, RouteError};

/// Exact-match key: packet source and destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowMatch {
    pub src: NodeId,
    pub dst: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowAction {
    Forward(NodeId),
    Drop,
}

/// One forwarding rule at a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub matches: FlowMatch,
    pub action: FlowAction,
    pub priority: u32,
    pub installed_at_ms: f64,
    /// Absolute expiry regardless of use (short-lived drop rules).
    pub hard_expiry_ms: Option<f64>,
    pub last_used_ms: f64,
}

impl FlowEntry {
    pub fn is_expired(&self, now_ms: f64, idle_timeout_ms: f64) -> bool {
        if let Some(hard) = self.hard_expiry_ms {
            if now_ms >= hard {
                return true;
            }
        }
        now_ms - self.last_used_ms > idle_timeout_ms
    }
}

/// Forwarding state held at one node.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlowTable {
    pub owner: NodeId,
    pub entries: Vec<FlowEntry>,
}

impl FlowTable {
    pub fn new(owner: NodeId) -> Self {
        FlowTable {
            owner,
            entries: Vec::new(),
        }
    }

    /// Highest-priority entry matching (src, dst); priority ties go to the
    /// most recently installed entry. `None` is a table miss.
    pub fn match_flow(&self, src: NodeId, dst: NodeId) -> Option<&FlowEntry> {
        self.entries
            .iter()
            .filter(|e| e.matches.src == src && e.matches.dst == dst)
            .max_by(|x, y| {
                x.priority.cmp(&y.priority).then(
                    x.installed_at_ms
                        .partial_cmp(&y.installed_at_ms)
                        .unwrap_or(std::cmp::Ordering::Equal),
                )
            })
    }

    /// Upsert keyed by (match, priority).
    pub fn install(&mut self, entry: FlowEntry) {
        match self
            .entries
            .iter_mut()
            .find(|e| e.matches == entry.matches && e.priority == entry.priority)
        {
            Some(existing) => *existing = entry,
            None => self.entries.push(entry),
        }
    }

    /// Removes every entry for the match, at any priority.
    pub fn remove(&mut self, matches: FlowMatch) {
        self.entries.retain(|e| e.matches != matches);
    }

    /// Drops expired entries.
    pub fn sweep(&mut self, now_ms: f64, idle_timeout_ms: f64) {
        self.entries
            .retain(|e| !e.is_expired(now_ms, idle_timeout_ms));
    }

    pub fn touch(&mut self, src: NodeId, dst: NodeId, now_ms: f64) {
        // Refresh the same entry match_flow would return.
        let best = self
            .match_flow(src, dst)
            .map(|e| (e.matches, e.priority));
        if let Some((m, p)) = best {
            if let Some(e) = self
                .entries
                .iter_mut()
                .find(|e| e.matches == m && e.priority == p)
            {
                e.last_used_ms = now_ms;
            }
        }
    }
}

/// Controller-to-node table change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FlowMod {
    Install { node: NodeId, entry: FlowEntry },
    Remove { node: NodeId, matches: FlowMatch },
}

impl FlowMod {
    pub fn node(&self) -> NodeId {
        match self {
            FlowMod::Install { node, .. } | FlowMod::Remove { node, .. } => *node,
        }
    }
}

/// Timing decomposition of one reconfiguration; `total_ms` is exactly the
/// sum of the three components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconfigRecord {
    pub t_detection_ms: f64,
    pub t_computation_ms: f64,
    pub t_update_ms: f64,
    pub total_ms: f64,
}

impl ReconfigRecord {
    pub fn new(t_detection_ms: f64, t_computation_ms: f64, t_update_ms: f64) -> Self {
        ReconfigRecord {
            t_detection_ms,
            t_computation_ms,
            t_update_ms,
            total_ms: t_detection_ms + t_computation_ms + t_update_ms,
        }
    }
}

/// Routing-table update time for either mode: discovery + propagation +
/// reconfiguration for the distributed protocol, detection + computation +
/// update for the controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UpdateTimeRecord {
    Manet {
        discovery_ms: f64,
        propagation_ms: f64,
        /// Time from reply receipt to the first data packet forwarded on the
        /// new route; unknown until that packet goes out.
        reconfiguration_ms: Option<f64>,
    },
    Sdn(ReconfigRecord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("update-time record is missing a component")]
pub struct IncompleteRecord;

pub fn routing_table_update_time(record: &UpdateTimeRecord) -> Result<f64, IncompleteRecord> {
    match record {
        UpdateTimeRecord::Manet {
            discovery_ms,
            propagation_ms,
            reconfiguration_ms,
        } => match reconfiguration_ms {
            Some(r) => Ok(discovery_ms + propagation_ms + r),
            None => Err(IncompleteRecord),
        },
        UpdateTimeRecord::Sdn(rec) => Ok(rec.total_ms),
    }
}

/// Which quantity path computation minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PathObjective {
    /// Sum of link weights along the path.
    #[default]
    LinkWeight,
    /// Sum over path nodes of node_weight * degree.
    NodeWeightDegree,
}

/// Controller timing and table parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdnTiming {
    pub compute_ms: f64,
    pub control_delay_ms: f64,
    pub flow_idle_timeout_ms: f64,
    pub drop_entry_expiry_ms: f64,
}

impl Default for SdnTiming {
    fn default() -> Self {
        SdnTiming {
            compute_ms: 5.0,
            control_delay_ms: 10.0,
            flow_idle_timeout_ms: 5000.0,
            drop_entry_expiry_ms: 1000.0,
        }
    }
}

const PRIORITY_FORWARD: u32 = 1;
const PRIORITY_DROP: u32 = 1;
const PRIORITY_QUARANTINE: u32 = 2;

/// Result of a table-miss escalation.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketInResponse {
    pub mods: Vec<FlowMod>,
    pub path: Option<Path>,
}

/// Result of reconfiguring after a link failure.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFailureResponse {
    pub mods: Vec<FlowMod>,
    /// Every flow that was recomputed, with its new path (None = now
    /// unreachable).
    pub reroutes: Vec<(FlowMatch, Option<Path>)>,
    pub record: ReconfigRecord,
}

/// The centralized controller: a topology view assembled from node status
/// reports plus the set of flows it has installed.
#[derive(Debug, Clone)]
pub struct Controller {
    node_count: usize,
    /// Latest reported neighbor set (with link weights) per node.
    reported: Vec<BTreeMap<NodeId, f64>>,
    node_weights: Vec<f64>,
    quarantined: BTreeSet<NodeId>,
    flows: BTreeMap<FlowMatch, Option<Path>>,
    timing: SdnTiming,
    objective: PathObjective,
}

impl Controller {
    pub fn new(node_count: usize, timing: SdnTiming, objective: PathObjective) -> Self {
        Controller {
            node_count,
            reported: vec![BTreeMap::new(); node_count],
            node_weights: vec![1.0; node_count],
            quarantined: BTreeSet::new(),
            flows: BTreeMap::new(),
            timing,
            objective,
        }
    }

    pub fn timing(&self) -> &SdnTiming {
        &self.timing
    }

    pub fn set_node_weights(&mut self, weights: Vec<f64>) {
        self.node_weights = weights;
    }

    pub fn quarantined(&self) -> &BTreeSet<NodeId> {
        &self.quarantined
    }

    pub fn installed_path(&self, matches: FlowMatch) -> Option<&Path> {
        self.flows.get(&matches).and_then(|p| p.as_ref())
    }

    pub fn active_flows(&self) -> impl Iterator<Item = (&FlowMatch, &Option<Path>)> {
        self.flows.iter()
    }

    /// Ingests one status report: `node`'s live neighbors and link weights.
    pub fn apply_report(&mut self, node: NodeId, neighbors: Vec<(NodeId, f64)>) {
        self.reported[node.index()] = neighbors.into_iter().collect();
    }

    /// Convenience for tests and offline use: report every node at once.
    pub fn ingest_snapshot(&mut self, snapshot: &crate::topology::TopologySnapshot) {
        for node in &snapshot.nodes {
            let neighbors = snapshot
                .neighbors(node.id)
                .into_iter()
                .map(|v| (v, snapshot.live_link(node.id, v).unwrap().weight))
                .collect();
            self.apply_report(node.id, neighbors);
        }
    }

    /// Current view links with weights, canonically ordered.
    pub fn view_links_snapshot(&self) -> Vec<(NodeId, NodeId, f64)> {
        self.view_links()
    }

    /// A link exists in the view when both endpoints currently report it;
    /// losing either side's report removes it.
    fn view_has_link(&self, a: NodeId, b: NodeId) -> bool {
        self.reported[a.index()].contains_key(&b) && self.reported[b.index()].contains_key(&a)
    }

    fn view_links(&self) -> Vec<(NodeId, NodeId, f64)> {
        let mut out = Vec::new();
        for (i, neighbors) in self.reported.iter().enumerate() {
            let a = NodeId(i as u32);
            for (&b, &w) in neighbors {
                if a < b && self.view_has_link(a, b) {
                    out.push((a, b, w));
                }
            }
        }
        out
    }

    fn view_degree(&self, n: NodeId) -> usize {
        self.reported[n.index()]
            .keys()
            .filter(|&&b| self.view_has_link(n, b))
            .count()
    }

    fn view_graph(&self) -> CostGraph {
        let mut graph = CostGraph::with_nodes(self.node_count);
        for (a, b, w) in self.view_links() {
            if self.quarantined.contains(&a) || self.quarantined.contains(&b) {
                continue;
            }
            match self.objective {
                PathObjective::LinkWeight => graph.add_undirected(a, b, w),
                PathObjective::NodeWeightDegree => {
                    // Entering a node costs node_weight * degree.
                    let cost = |n: NodeId| {
                        self.node_weights[n.index()] * self.view_degree(n) as f64
                    };
                    graph.add_edge(a, b, cost(b));
                    graph.add_edge(b, a, cost(a));
                }
            }
        }
        graph.normalize();
        graph
    }

    /// Optimal path on the current view, honoring quarantine and the
    /// configured objective. The returned total_weight is always the sum of
    /// link weights along the chosen hops.
    pub fn compute_path(&self, src: NodeId, dst: NodeId) -> Result<Path, RouteError> {
        if self.quarantined.contains(&src) || self.quarantined.contains(&dst) {
            return Err(RouteError::NoRoute { src, dst });
        }
        let solved = self.view_graph().shortest_path(src, dst)?;
        let link_weight: f64 = solved
            .hops
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                *self.reported[a.index()].get(&b).unwrap_or(&1.0)
            })
            .sum();
        Ok(Path::new(solved.hops, link_weight))
    }

    fn forward_entries(&self, path: &Path, now_ms: f64) -> Vec<FlowMod> {
        let matches = FlowMatch {
            src: path.source().unwrap(),
            dst: path.destination().unwrap(),
        };
        let installed_at = now_ms + self.timing.compute_ms + self.timing.control_delay_ms;
        path.segments()
            .map(|(node, next)| FlowMod::Install {
                node,
                entry: FlowEntry {
                    matches,
                    action: FlowAction::Forward(next),
                    priority: PRIORITY_FORWARD,
                    installed_at_ms: installed_at,
                    hard_expiry_ms: None,
                    last_used_ms: installed_at,
                },
            })
            .collect()
    }

    fn drop_entry(&self, node: NodeId, matches: FlowMatch, priority: u32, now_ms: f64) -> FlowMod {
        let installed_at = now_ms + self.timing.compute_ms + self.timing.control_delay_ms;
        FlowMod::Install {
            node,
            entry: FlowEntry {
                matches,
                action: FlowAction::Drop,
                priority,
                installed_at_ms: installed_at,
                hard_expiry_ms: Some(installed_at + self.timing.drop_entry_expiry_ms),
                last_used_ms: installed_at,
            },
        }
    }

    /// Table miss at `at_node` for packets (src, dst): computes the path and
    /// returns installations for every node on it, or a short-lived drop
    /// rule at `at_node` when the destination is unreachable.
    pub fn packet_in(
        &mut self,
        src: NodeId,
        dst: NodeId,
        at_node: NodeId,
        now_ms: f64,
    ) -> PacketInResponse {
        let matches = FlowMatch { src, dst };
        match self.compute_path(src, dst) {
            Ok(path) => {
                let mut mods = self.forward_entries(&path, now_ms);
                if !path.contains(at_node) {
                    // The miss came from a node off the (re)computed path;
                    // stop it from escalating again.
                    mods.push(self.drop_entry(at_node, matches, PRIORITY_DROP, now_ms));
                }
                self.flows.insert(matches, Some(path.clone()));
                PacketInResponse {
                    mods,
                    path: Some(path),
                }
            }
            Err(_) => {
                let mods = vec![self.drop_entry(at_node, matches, PRIORITY_DROP, now_ms)];
                self.flows.insert(matches, None);
                PacketInResponse { mods, path: None }
            }
        }
    }

    /// Reconfigures every flow whose installed path crossed the failed link.
    /// `t_detection_ms` is the elapsed time from the failure to controller
    /// awareness, supplied by the caller (it knows when the link died);
    /// `now_ms` stamps the resulting entries.
    pub fn handle_link_failure(
        &mut self,
        failed: (NodeId, NodeId),
        t_detection_ms: f64,
        now_ms: f64,
    ) -> LinkFailureResponse {
        let uses_link = |p: &Path| {
            p.segments()
                .any(|(a, b)| crate::topology::link_key(a, b) == crate::topology::link_key(failed.0, failed.1))
        };
        let affected: Vec<FlowMatch> = self
            .flows
            .iter()
            .filter_map(|(m, p)| p.as_ref().filter(|p| uses_link(p)).map(|_| *m))
            .collect();

        let mut mods = Vec::new();
        let mut reroutes = Vec::new();
        for matches in affected {
            let old_path = self.flows[&matches].clone().unwrap();
            match self.compute_path(matches.src, matches.dst) {
                Ok(new_path) => {
                    mods.extend(self.forward_entries(&new_path, now_ms));
                    for node in &old_path.hops {
                        if *node != matches.dst && !new_path.contains(*node) {
                            mods.push(FlowMod::Remove {
                                node: *node,
                                matches,
                            });
                        }
                    }
                    self.flows.insert(matches, Some(new_path.clone()));
                    reroutes.push((matches, Some(new_path)));
                }
                Err(_) => {
                    mods.push(self.drop_entry(matches.src, matches, PRIORITY_DROP, now_ms));
                    for node in &old_path.hops {
                        if *node != matches.src && *node != matches.dst {
                            mods.push(FlowMod::Remove {
                                node: *node,
                                matches,
                            });
                        }
                    }
                    self.flows.insert(matches, None);
                    reroutes.push((matches, None));
                }
            }
        }

        let t_update = if mods.is_empty() {
            0.0
        } else {
            // Fixed one-way control delay: the farthest modified node hears
            // at the same offset as every other.
            self.timing.control_delay_ms
        };
        LinkFailureResponse {
            mods,
            reroutes,
            record: ReconfigRecord::new(t_detection_ms, self.timing.compute_ms, t_update),
        }
    }

    /// Excludes `bad_node` from all path computation, recomputes flows that
    /// traversed it, and drops traffic it originates at its neighbors.
    pub fn quarantine_node(&mut self, bad_node: NodeId, now_ms: f64) -> Vec<FlowMod> {
        let neighbors: Vec<NodeId> = self.reported[bad_node.index()]
            .keys()
            .copied()
            .filter(|&b| self.view_has_link(bad_node, b))
            .collect();
        self.quarantined.insert(bad_node);

        let mut mods = Vec::new();

        // Flows transiting (or terminating at) the quarantined node.
        let affected: Vec<FlowMatch> = self
            .flows
            .iter()
            .filter_map(|(m, p)| {
                let transits = p.as_ref().is_some_and(|p| p.contains(bad_node));
                (transits || m.src == bad_node || m.dst == bad_node).then_some(*m)
            })
            .collect();
        for matches in affected {
            let old_path = self.flows[&matches].clone();
            match self.compute_path(matches.src, matches.dst) {
                Ok(new_path) => {
                    mods.extend(self.forward_entries(&new_path, now_ms));
                    if let Some(old) = &old_path {
                        for node in &old.hops {
                            if *node != matches.dst && !new_path.contains(*node) {
                                mods.push(FlowMod::Remove {
                                    node: *node,
                                    matches,
                                });
                            }
                        }
                    }
                    self.flows.insert(matches, Some(new_path));
                }
                Err(_) => {
                    if matches.src != bad_node {
                        mods.push(self.drop_entry(matches.src, matches, PRIORITY_DROP, now_ms));
                    }
                    if let Some(old) = &old_path {
                        for node in &old.hops {
                            if *node != matches.src && *node != matches.dst {
                                mods.push(FlowMod::Remove {
                                    node: *node,
                                    matches,
                                });
                            }
                        }
                    }
                    self.flows.insert(matches, None);
                }
            }
        }

        // Packets sourced by the quarantined node die at its neighbors.
        let sourced: Vec<FlowMatch> = self
            .flows
            .keys()
            .copied()
            .filter(|m| m.src == bad_node)
            .collect();
        for matches in sourced {
            for &n in &neighbors {
                mods.push(self.drop_entry(n, matches, PRIORITY_QUARANTINE, now_ms));
            }
        }
        mods
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{Link, NodeState, Point, TopologySnapshot};
    use std::collections::BTreeMap as Map;

    fn entry(src: u32, dst: u32, action: FlowAction, priority: u32, at: f64) -> FlowEntry {
        FlowEntry {
            matches: FlowMatch {
                src: NodeId(src),
                dst: NodeId(dst),
            },
            action,
            priority,
            installed_at_ms: at,
            hard_expiry_ms: None,
            last_used_ms: at,
        }
    }

    /// The five-node graph: chain 0-1-2-4 at weight 1, detour 0-3 at
    /// weight 5, 3-4 at weight 1.
    fn five_node_snapshot() -> TopologySnapshot {
        let nodes = (0..5)
            .map(|i| NodeState::new(NodeId(i), Point::new(i as f64 * 1000.0, 0.0), 1.0))
            .collect();
        let mut snap = TopologySnapshot::new(nodes);
        let mut links = Map::new();
        for (a, b, w) in [
            (0u32, 1u32, 1.0),
            (1, 2, 1.0),
            (2, 4, 1.0),
            (0, 3, 5.0),
            (3, 4, 1.0),
        ] {
            let key = crate::topology::link_key(NodeId(a), NodeId(b));
            links.insert(
                key,
                Link {
                    a: key.0,
                    b: key.1,
                    weight: w,
                    capacity_bps: 1e6,
                    up: true,
                },
            );
        }
        snap.set_links(links);
        snap
    }

    fn controller_with_view(snap: &TopologySnapshot) -> Controller {
        let mut c = Controller::new(snap.nodes.len(), SdnTiming::default(), PathObjective::LinkWeight);
        c.ingest_snapshot(snap);
        c
    }

    #[test]
    fn match_flow_table_one() {
        // Node B's table: (A,E) -> Forward to C at high priority,
        // (D,F) -> Forward to E at medium priority.
        let mut table = FlowTable::new(NodeId(1));
        table.install(entry(0, 4, FlowAction::Forward(NodeId(2)), 2, 0.0));
        table.install(entry(3, 5, FlowAction::Forward(NodeId(4)), 1, 0.0));

        let hit = table.match_flow(NodeId(0), NodeId(4)).unwrap();
        assert_eq!(hit.action, FlowAction::Forward(NodeId(2)));
        let other = table.match_flow(NodeId(3), NodeId(5)).unwrap();
        assert_eq!(other.action, FlowAction::Forward(NodeId(4)));
    }

    #[test]
    fn empty_table_misses() {
        let table = FlowTable::new(NodeId(0));
        assert!(table.match_flow(NodeId(0), NodeId(1)).is_none());
    }

    #[test]
    fn higher_priority_wins() {
        let mut table = FlowTable::new(NodeId(0));
        table.install(entry(0, 4, FlowAction::Forward(NodeId(1)), 5, 0.0));
        table.install(entry(0, 4, FlowAction::Drop, 9, 0.0));
        assert_eq!(
            table.match_flow(NodeId(0), NodeId(4)).unwrap().priority,
            9
        );
    }

    #[test]
    fn priority_tie_broken_by_recency_and_permutation_invariant() {
        let e_old = entry(0, 4, FlowAction::Forward(NodeId(1)), 5, 10.0);
        let e_new = entry(0, 4, FlowAction::Forward(NodeId(2)), 5, 20.0);
        for order in [[&e_old, &e_new], [&e_new, &e_old]] {
            let table = FlowTable {
                owner: NodeId(0),
                entries: order.into_iter().cloned().collect(),
            };
            assert_eq!(
                table.match_flow(NodeId(0), NodeId(4)).unwrap().action,
                FlowAction::Forward(NodeId(2))
            );
        }
    }

    #[test]
    fn packet_in_five_node_scenario() {
        let snap = five_node_snapshot();
        let mut controller = controller_with_view(&snap);
        let resp = controller.packet_in(NodeId(0), NodeId(4), NodeId(0), 0.0);

        let path = resp.path.expect("route exists");
        assert_eq!(path.hops, vec![NodeId(0), NodeId(1), NodeId(2), NodeId(4)]);
        // Forward entries at 0, 1, 2 pointing down the path.
        let targets: Vec<(NodeId, FlowAction)> = resp
            .mods
            .iter()
            .map(|m| match m {
                FlowMod::Install { node, entry } => (*node, entry.action),
                other => panic!("unexpected mod {other:?}"),
            })
            .collect();
        assert_eq!(
            targets,
            vec![
                (NodeId(0), FlowAction::Forward(NodeId(1))),
                (NodeId(1), FlowAction::Forward(NodeId(2))),
                (NodeId(2), FlowAction::Forward(NodeId(4))),
            ]
        );
    }

    #[test]
    fn packet_in_single_hop() {
        let snap = five_node_snapshot();
        let mut controller = controller_with_view(&snap);
        let resp = controller.packet_in(NodeId(3), NodeId(4), NodeId(3), 0.0);
        assert_eq!(resp.mods.len(), 1);
        match &resp.mods[0] {
            FlowMod::Install { node, entry } => {
                assert_eq!(*node, NodeId(3));
                assert_eq!(entry.action, FlowAction::Forward(NodeId(4)));
            }
            other => panic!("unexpected mod {other:?}"),
        }
    }

    #[test]
    fn packet_in_partitioned_installs_drop() {
        let mut snap = five_node_snapshot();
        snap.set_link_up(NodeId(1), NodeId(2), false);
        snap.set_link_up(NodeId(0), NodeId(3), false);
        let mut controller = controller_with_view(&snap);
        let resp = controller.packet_in(NodeId(0), NodeId(4), NodeId(0), 0.0);
        assert!(resp.path.is_none());
        assert_eq!(resp.mods.len(), 1);
        match &resp.mods[0] {
            FlowMod::Install { node, entry } => {
                assert_eq!(*node, NodeId(0));
                assert_eq!(entry.action, FlowAction::Drop);
                assert!(entry.hard_expiry_ms.is_some());
            }
            other => panic!("unexpected mod {other:?}"),
        }
    }

    #[test]
    fn link_failure_reroutes_and_cleans_up() {
        let snap = five_node_snapshot();
        let mut controller = controller_with_view(&snap);
        controller.packet_in(NodeId(0), NodeId(4), NodeId(0), 0.0);

        // Link 1-2 dies; both endpoints stop reporting it.
        let mut broken = snap.clone();
        broken.set_link_up(NodeId(1), NodeId(2), false);
        controller.ingest_snapshot(&broken);
        let resp = controller.handle_link_failure((NodeId(1), NodeId(2)), 100.0, 0.0);

        assert_eq!(resp.reroutes.len(), 1);
        let (matches, new_path) = &resp.reroutes[0];
        assert_eq!(
            *matches,
            FlowMatch {
                src: NodeId(0),
                dst: NodeId(4)
            }
        );
        assert_eq!(
            new_path.as_ref().unwrap().hops,
            vec![NodeId(0), NodeId(3), NodeId(4)]
        );

        // Stale entries at nodes 1 and 2 are revoked.
        let removals: Vec<NodeId> = resp
            .mods
            .iter()
            .filter_map(|m| match m {
                FlowMod::Remove { node, .. } => Some(*node),
                _ => None,
            })
            .collect();
        assert_eq!(removals, vec![NodeId(1), NodeId(2)]);

        // Record satisfies the exact sum.
        let r = resp.record;
        assert_eq!(r.total_ms, r.t_detection_ms + r.t_computation_ms + r.t_update_ms);
        assert_eq!(r.t_detection_ms, 100.0);
        assert_eq!(r.t_computation_ms, 5.0);
        assert_eq!(r.t_update_ms, 10.0);
    }

    #[test]
    fn link_failure_with_no_flows_is_vacuous() {
        let snap = five_node_snapshot();
        let mut controller = controller_with_view(&snap);
        let resp = controller.handle_link_failure((NodeId(1), NodeId(2)), 50.0, 0.0);
        assert!(resp.mods.is_empty());
        assert!(resp.reroutes.is_empty());
        assert_eq!(resp.record.t_update_ms, 0.0);
        assert_eq!(resp.record.total_ms, 50.0 + 5.0);
    }

    #[test]
    fn reconfig_record_sum_example() {
        let r = ReconfigRecord::new(100.0, 5.0, 20.0);
        assert_eq!(r.total_ms, 125.0);
        assert_eq!(
            routing_table_update_time(&UpdateTimeRecord::Sdn(r)).unwrap(),
            125.0
        );
    }

    #[test]
    fn update_time_examples() {
        let manet = UpdateTimeRecord::Manet {
            discovery_ms: 10.0,
            propagation_ms: 5.0,
            reconfiguration_ms: Some(5.0),
        };
        assert_eq!(routing_table_update_time(&manet).unwrap(), 20.0);

        let zero = UpdateTimeRecord::Sdn(ReconfigRecord::new(0.0, 0.0, 0.0));
        assert_eq!(routing_table_update_time(&zero).unwrap(), 0.0);

        let incomplete = UpdateTimeRecord::Manet {
            discovery_ms: 10.0,
            propagation_ms: 5.0,
            reconfiguration_ms: None,
        };
        assert_eq!(routing_table_update_time(&incomplete), Err(IncompleteRecord));
    }

    #[test]
    fn quarantine_transit_node_forces_detour() {
        let snap = five_node_snapshot();
        let mut controller = controller_with_view(&snap);
        controller.packet_in(NodeId(0), NodeId(4), NodeId(0), 0.0);

        let mods = controller.quarantine_node(NodeId(1), 0.0);
        let new_path = controller
            .installed_path(FlowMatch {
                src: NodeId(0),
                dst: NodeId(4),
            })
            .unwrap();
        assert_eq!(new_path.hops, vec![NodeId(0), NodeId(3), NodeId(4)]);
        assert!(!mods.is_empty());
        // No forward action may point at the quarantined node.
        for m in &mods {
            if let FlowMod::Install { entry, .. } = m {
                assert_ne!(entry.action, FlowAction::Forward(NodeId(1)));
            }
        }
    }

    #[test]
    fn quarantine_off_path_node_changes_nothing() {
        let snap = five_node_snapshot();
        let mut controller = controller_with_view(&snap);
        controller.packet_in(NodeId(0), NodeId(4), NodeId(0), 0.0);
        controller.quarantine_node(NodeId(3), 0.0);
        let path = controller
            .installed_path(FlowMatch {
                src: NodeId(0),
                dst: NodeId(4),
            })
            .unwrap();
        assert_eq!(path.hops, vec![NodeId(0), NodeId(1), NodeId(2), NodeId(4)]);
    }

    #[test]
    fn quarantine_isolated_node_is_vacuous() {
        let mut snap = five_node_snapshot();
        snap.set_link_up(NodeId(0), NodeId(3), false);
        snap.set_link_up(NodeId(3), NodeId(4), false);
        let mut controller = controller_with_view(&snap);
        let mods = controller.quarantine_node(NodeId(3), 0.0);
        assert!(mods.is_empty());
    }

    #[test]
    fn sweep_expires_idle_and_hard_entries() {
        let mut table = FlowTable::new(NodeId(0));
        table.install(entry(0, 1, FlowAction::Forward(NodeId(1)), 1, 0.0));
        let mut dropper = entry(0, 2, FlowAction::Drop, 1, 0.0);
        dropper.hard_expiry_ms = Some(100.0);
        table.install(dropper);

        table.sweep(50.0, 5000.0);
        assert_eq!(table.entries.len(), 2);
        table.sweep(150.0, 5000.0);
        assert_eq!(table.entries.len(), 1, "hard expiry enforced");
        table.sweep(6000.0, 5000.0);
        assert!(table.entries.is_empty(), "idle timeout enforced");
    }
}
