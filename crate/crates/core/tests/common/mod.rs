//! Shared helpers for the integration suites: explicit snapshot
//! construction, random graph generation, the exhaustive path oracle, and
//! the staged five-node failover scenario.

use std::collections::BTreeMap;

use rand::Rng;
use sdmanet_core::config::{FlowConfig, LinkEventConfig, Mode, ScenarioConfig};
use sdmanet_core::topology::{link_key, Link, NodeId, NodeState, Point, TopologySnapshot};

/// Snapshot with explicitly supplied weighted links.
pub fn explicit_snapshot(n: u32, edges: &[(u32, u32, f64)]) -> TopologySnapshot {
    let nodes = (0..n)
        .map(|i| NodeState::new(NodeId(i), Point::new(i as f64 * 1000.0, 0.0), 1.0))
        .collect();
    let mut snap = TopologySnapshot::new(nodes);
    let mut links = BTreeMap::new();
    for &(a, b, w) in edges {
        let key = link_key(NodeId(a), NodeId(b));
        links.insert(
            key,
            Link {
                a: key.0,
                b: key.1,
                weight: w,
                capacity_bps: 1_000_000.0,
                up: true,
            },
        );
    }
    snap.set_links(links);
    snap
}

/// The five-node scenario graph: chain 0-1-2-4 of weight-1 links plus the
/// weight-5 detour 0-3 and weight-1 link 3-4.
pub fn five_node_snapshot() -> TopologySnapshot {
    explicit_snapshot(
        5,
        &[
            (0, 1, 1.0),
            (1, 2, 1.0),
            (2, 4, 1.0),
            (0, 3, 5.0),
            (3, 4, 1.0),
        ],
    )
}

/// Random connected graph on 2..=max_n nodes with dyadic weights (k/8), so
/// every path cost is exact in f64 and ties are common.
pub fn random_connected_graph<R: Rng>(rng: &mut R, max_n: u32) -> TopologySnapshot {
    let n = rng.random_range(2..=max_n);
    let mut edges: Vec<(u32, u32, f64)> = Vec::new();
    let mut weight = |rng: &mut R| rng.random_range(1..=24) as f64 / 8.0;
    // Random spanning tree keeps it connected.
    for v in 1..n {
        let u = rng.random_range(0..v);
        let w = weight(rng);
        edges.push((u, v, w));
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if edges.iter().any(|&(x, y, _)| (x, y) == (a, b)) {
                continue;
            }
            if rng.random_bool(0.35) {
                let w = weight(rng);
                edges.push((a, b, w));
            }
        }
    }
    explicit_snapshot(n, &edges)
}

/// The five-node story staged on unit-disk geometry: a chain 0-1-2-4
/// carries one flow while node 3 starts isolated; node 3 comes back at 60 s
/// and the chain link 1-2 breaks at 90 s, forcing a failover through 3.
pub fn staged_failover_config(mode: Mode) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.mode = mode;
    cfg.seed = 3;
    cfg.duration_ms = 120_000.0;
    cfg.node_count = 5;
    cfg.area.width_m = 500.0;
    cfg.area.height_m = 300.0;
    cfg.radio_range_m = 250.0;
    cfg.positions = Some(vec![
        [0.0, 200.0],
        [150.0, 200.0],
        [300.0, 200.0],
        [225.0, 100.0],
        [450.0, 200.0],
    ]);
    cfg.mobility.speed_min_mps = 0.0;
    cfg.mobility.speed_max_mps = 0.0;
    cfg.traffic.flows = vec![FlowConfig {
        src: 0,
        dst: 4,
        rate_pps: 4.0,
        packet_bytes: 512,
        start_ms: 1000.0,
        end_ms: Some(110_000.0),
    }];
    let isolate = |b: u32| LinkEventConfig {
        at_ms: 0.0,
        a: 3.min(b),
        b: 3.max(b),
        up: false,
    };
    let revive = |b: u32| LinkEventConfig {
        at_ms: 60_000.0,
        a: 3.min(b),
        b: 3.max(b),
        up: true,
    };
    cfg.link_events = vec![
        isolate(0),
        isolate(1),
        isolate(2),
        isolate(4),
        revive(0),
        revive(1),
        revive(2),
        revive(4),
        LinkEventConfig {
            at_ms: 90_000.0,
            a: 1,
            b: 2,
            up: false,
        },
    ];
    cfg.validate().expect("valid staged config");
    cfg
}

/// Exhaustive simple-path enumeration: minimum total weight, ties broken by
/// lexicographically smallest hop sequence. Independent of the solver.
pub fn enumerate_best_path(
    snap: &TopologySnapshot,
    src: NodeId,
    dst: NodeId,
) -> Option<(f64, Vec<NodeId>)> {
    fn dfs(
        snap: &TopologySnapshot,
        current: NodeId,
        dst: NodeId,
        visited: &mut Vec<NodeId>,
        cost: f64,
        best: &mut Option<(f64, Vec<NodeId>)>,
    ) {
        if current == dst {
            let candidate = (cost, visited.clone());
            let better = match best {
                None => true,
                Some((bc, bh)) => cost < *bc || (cost == *bc && candidate.1 < *bh),
            };
            if better {
                *best = Some(candidate);
            }
            return;
        }
        for v in snap.neighbors(current) {
            if visited.contains(&v) {
                continue;
            }
            let w = snap.live_link(current, v).unwrap().weight;
            visited.push(v);
            dfs(snap, v, dst, visited, cost + w, best);
            visited.pop();
        }
    }
    let mut best = None;
    let mut visited = vec![src];
    dfs(snap, src, dst, &mut visited, 0.0, &mut best);
    best
}
