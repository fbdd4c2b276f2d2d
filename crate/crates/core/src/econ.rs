//! Economics of running the network: capital and operational expenditure,
//! transmission efficiency, fair resource allocation, security risk, and
//! capacity arithmetic. Everything here is a pure function of its inputs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::NodeId;

/// Per-node cost (or capacity) figures: either one value for every node or
/// an explicit per-node list. A list shorter than the node count repeats its
/// last value; an empty list means zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostSchedule {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl Default for CostSchedule {
    fn default() -> Self {
        CostSchedule::Uniform(0.0)
    }
}

impl CostSchedule {
    pub fn at(&self, i: usize) -> f64 {
        match self {
            CostSchedule::Uniform(v) => *v,
            CostSchedule::PerNode(vs) => match vs.get(i) {
                Some(v) => *v,
                None => vs.last().copied().unwrap_or(0.0),
            },
        }
    }

    /// Sum over nodes 0..n.
    pub fn sum(&self, n: usize) -> f64 {
        match self {
            CostSchedule::Uniform(v) => *v * n as f64,
            CostSchedule::PerNode(vs) => {
                let explicit: f64 = vs.iter().take(n).sum();
                if n > vs.len() {
                    explicit + vs.last().copied().unwrap_or(0.0) * (n - vs.len()) as f64
                } else {
                    explicit
                }
            }
        }
    }

    fn uniform_value(&self) -> Option<f64> {
        match self {
            CostSchedule::Uniform(v) => Some(*v),
            CostSchedule::PerNode(vs) => {
                let first = *vs.first()?;
                vs.iter().all(|v| *v == first).then_some(first)
            }
        }
    }

    /// Value taken by every node beyond the explicit list.
    fn tail(&self) -> f64 {
        match self {
            CostSchedule::Uniform(v) => *v,
            CostSchedule::PerNode(vs) => vs.last().copied().unwrap_or(0.0),
        }
    }

    fn explicit_len(&self) -> usize {
        match self {
            CostSchedule::Uniform(_) => 0,
            CostSchedule::PerNode(vs) => vs.len(),
        }
    }
}

/// All unit-cost inputs for the expenditure formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostBook {
    /// Specialized per-node hardware (distributed routing deployment).
    pub node_hw_specialized: CostSchedule,
    /// Per-node routing/management software (distributed deployment).
    pub node_sw: CostSchedule,
    /// General-purpose per-node hardware (controller-managed deployment).
    pub node_hw_generic: CostSchedule,
    pub controller: f64,
    pub node_maintenance: CostSchedule,
    pub node_configuration: CostSchedule,
    pub node_monitoring: CostSchedule,
    pub controller_maintenance: f64,
    pub controller_configuration: f64,
    pub controller_monitoring: f64,
    /// Reduced per-node maintenance once management is centralized.
    pub node_maintenance_reduced: CostSchedule,
}

impl Default for CostBook {
    fn default() -> Self {
        CostBook {
            node_hw_specialized: CostSchedule::Uniform(100.0),
            node_sw: CostSchedule::Uniform(50.0),
            node_hw_generic: CostSchedule::Uniform(60.0),
            controller: 500.0,
            node_maintenance: CostSchedule::Uniform(10.0),
            node_configuration: CostSchedule::Uniform(5.0),
            node_monitoring: CostSchedule::Uniform(5.0),
            controller_maintenance: 20.0,
            controller_configuration: 10.0,
            controller_monitoring: 10.0,
            node_maintenance_reduced: CostSchedule::Uniform(2.0),
        }
    }
}

impl CostBook {
    /// Sanity warnings that are not errors: generic hardware is expected to
    /// cost no more than specialized hardware.
    pub fn warnings(&self, n: usize) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..n.max(1) {
            if self.node_hw_generic.at(i) > self.node_hw_specialized.at(i) {
                out.push(format!(
                    "cost_book: generic hardware cost ({}) exceeds specialized cost ({}) at node {i}",
                    self.node_hw_generic.at(i),
                    self.node_hw_specialized.at(i)
                ));
                break;
            }
        }
        out
    }
}

/// Shared bandwidth/power budget and per-node demands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePool {
    pub bandwidth_total_bps: f64,
    pub power_total_w: f64,
    pub demands: Vec<ResourceDemand>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ResourceDemand {
    pub bandwidth_bps: f64,
    pub power_w: f64,
}

impl Default for ResourcePool {
    fn default() -> Self {
        ResourcePool {
            bandwidth_total_bps: 1_000_000.0,
            power_total_w: 100.0,
            demands: Vec::new(),
        }
    }
}

/// Per-node share of each resource, index-aligned with the pool's demands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub bandwidth_bps: Vec<f64>,
    pub power_w: Vec<f64>,
}

/// One exploitable weakness: exploitation probability, impact, and the node
/// hosting it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vulnerability {
    pub probability: f64,
    pub impact: f64,
    pub host: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct VulnerabilityProfile {
    pub entries: Vec<Vulnerability>,
}

/// Capacity figures for the scalability arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityBook {
    pub node_capacity: CostSchedule,
    pub controller_capacity: f64,
    pub clustered_capacity: f64,
    pub sliced_capacity: f64,
}

impl Default for CapacityBook {
    fn default() -> Self {
        CapacityBook {
            node_capacity: CostSchedule::Uniform(10.0),
            controller_capacity: 25.0,
            clustered_capacity: 30.0,
            sliced_capacity: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EconError {
    #[error("total bits must be positive")]
    ZeroDenominator,
}

/// Capital expenditure of a distributed deployment: specialized hardware
/// plus per-node software, summed over n nodes.
pub fn capex_manet(book: &CostBook, n: usize) -> f64 {
    book.node_hw_specialized.sum(n) + book.node_sw.sum(n)
}

/// Capital expenditure of a controller-managed deployment: generic per-node
/// hardware plus one controller.
pub fn capex_sdn(book: &CostBook, n: usize) -> f64 {
    book.node_hw_generic.sum(n) + book.controller
}

/// Smallest node count at which the controller-managed deployment becomes
/// strictly cheaper, or `Never`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Breakeven {
    At(u64),
    Never,
}

pub fn capex_breakeven(book: &CostBook) -> Breakeven {
    let cheaper = |n: u64| capex_sdn(book, n as usize) < capex_manet(book, n as usize);

    let uniform = (
        book.node_hw_specialized.uniform_value(),
        book.node_hw_generic.uniform_value(),
        book.node_sw.uniform_value(),
    );
    if let (Some(spec), Some(generic), Some(sw)) = uniform {
        let delta = (spec - generic) + sw;
        if delta <= 0.0 {
            return Breakeven::Never;
        }
        // n* = ceil(controller / delta), bumped when the division is exact
        // because the advantage must be strict.
        let mut n = (book.controller / delta).ceil().max(1.0) as u64;
        while !cheaper(n) {
            n += 1;
        }
        while n > 1 && cheaper(n - 1) {
            n -= 1;
        }
        return Breakeven::At(n);
    }

    // Heterogeneous books: scan the explicit region, then the constant tail
    // behaves like the uniform case.
    let explicit = book
        .node_hw_specialized
        .explicit_len()
        .max(book.node_hw_generic.explicit_len())
        .max(book.node_sw.explicit_len());
    for n in 1..=explicit as u64 {
        if cheaper(n) {
            return Breakeven::At(n);
        }
    }
    let tail_delta =
        (book.node_hw_specialized.tail() - book.node_hw_generic.tail()) + book.node_sw.tail();
    if tail_delta <= 0.0 {
        return Breakeven::Never;
    }
    let deficit = capex_sdn(book, explicit) - capex_manet(book, explicit);
    let mut n = explicit as u64 + 1 + (deficit.max(0.0) / tail_delta).floor() as u64;
    while !cheaper(n) {
        n += 1;
    }
    while n > explicit as u64 + 1 && cheaper(n - 1) {
        n -= 1;
    }
    Breakeven::At(n)
}

/// Operational expenditure of a distributed deployment: per-node
/// maintenance + configuration + monitoring.
pub fn opex_manet(book: &CostBook, n: usize) -> f64 {
    book.node_maintenance.sum(n) + book.node_configuration.sum(n) + book.node_monitoring.sum(n)
}

/// Operational expenditure of a controller-managed deployment: controller
/// maintenance + configuration + monitoring plus reduced per-node upkeep.
pub fn opex_sdn(book: &CostBook, n: usize) -> f64 {
    book.controller_maintenance
        + book.controller_configuration
        + book.controller_monitoring
        + book.node_maintenance_reduced.sum(n)
}

/// Transmission efficiency: useful payload over total bits on the medium,
/// scaled by the optimization factor.
pub fn efficiency_sdn(useful_bits: f64, total_bits: f64, eta_opt: f64) -> Result<f64, EconError> {
    if total_bits <= 0.0 {
        return Err(EconError::ZeroDenominator);
    }
    Ok(useful_bits / total_bits * eta_opt)
}

/// Max-min fair (water-filling) split of `total` across `demands`: nobody
/// gets more than they asked for, the pool is exhausted whenever demand
/// exceeds it, and unmet nodes end up equalized at the water level.
pub fn water_fill(demands: &[f64], total: f64) -> Vec<f64> {
    let mut alloc = vec![0.0; demands.len()];
    if demands.is_empty() {
        return alloc;
    }
    let wanted: f64 = demands.iter().sum();
    if wanted <= total {
        alloc.copy_from_slice(demands);
        return alloc;
    }
    let mut order: Vec<usize> = (0..demands.len()).collect();
    order.sort_by(|&i, &j| demands[i].partial_cmp(&demands[j]).unwrap().then(i.cmp(&j)));
    let mut remaining = total.max(0.0);
    for (k, &i) in order.iter().enumerate() {
        let left = (demands.len() - k) as f64;
        let level = remaining / left;
        if demands[i] <= level {
            alloc[i] = demands[i];
            remaining -= demands[i];
        } else {
            for &j in &order[k..] {
                alloc[j] = level;
            }
            break;
        }
    }
    alloc
}

/// Independent water-filling of bandwidth and power.
pub fn allocate_resources(pool: &ResourcePool) -> Allocation {
    let bw: Vec<f64> = pool.demands.iter().map(|d| d.bandwidth_bps).collect();
    let pw: Vec<f64> = pool.demands.iter().map(|d| d.power_w).collect();
    Allocation {
        bandwidth_bps: water_fill(&bw, pool.bandwidth_total_bps),
        power_w: water_fill(&pw, pool.power_total_w),
    }
}

/// Normalized allocation cost: sum over nodes of B_i/B_total + P_i/P_total.
/// A full allocation of both resources costs exactly 2.0.
pub fn allocation_cost(allocation: &Allocation, pool: &ResourcePool) -> f64 {
    let bw: f64 = allocation.bandwidth_bps.iter().sum();
    let pw: f64 = allocation.power_w.iter().sum();
    bw / pool.bandwidth_total_bps + pw / pool.power_total_w
}

/// Residual security risk: sum of probability x impact over vulnerabilities
/// whose host has not been quarantined.
pub fn security_risk(profile: &VulnerabilityProfile, quarantined: &BTreeSet<NodeId>) -> f64 {
    profile
        .entries
        .iter()
        .filter(|v| !quarantined.contains(&v.host))
        .map(|v| v.probability * v.impact)
        .sum()
}

/// Aggregate capacity with a controller: per-node capacities plus the
/// controller's own.
pub fn capacity_sdn(book: &CapacityBook, n: usize) -> f64 {
    book.node_capacity.sum(n) + book.controller_capacity
}

/// Combined capacity of clustering and network slicing.
pub fn capacity_total(book: &CapacityBook) -> f64 {
    book.clustered_capacity + book.sliced_capacity
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_book(spec: f64, sw: f64, generic: f64, controller: f64) -> CostBook {
        CostBook {
            node_hw_specialized: CostSchedule::Uniform(spec),
            node_sw: CostSchedule::Uniform(sw),
            node_hw_generic: CostSchedule::Uniform(generic),
            controller,
            ..CostBook::default()
        }
    }

    /// Direct-summation oracle, term by term.
    fn sum_oracle(schedule: &CostSchedule, n: usize) -> f64 {
        (0..n).map(|i| schedule.at(i)).sum()
    }

    #[test]
    fn capex_manet_examples() {
        let book = uniform_book(100.0, 50.0, 60.0, 500.0);
        assert_eq!(capex_manet(&book, 0), 0.0);
        assert_eq!(capex_manet(&book, 10), 1500.0);
        assert_eq!(
            capex_manet(&book, 10),
            sum_oracle(&book.node_hw_specialized, 10) + sum_oracle(&book.node_sw, 10)
        );

        let hetero = CostBook {
            node_hw_specialized: CostSchedule::PerNode(vec![100.0, 120.0]),
            node_sw: CostSchedule::PerNode(vec![50.0, 60.0]),
            ..CostBook::default()
        };
        assert_eq!(capex_manet(&hetero, 2), 330.0);
        assert_eq!(
            capex_manet(&hetero, 2),
            sum_oracle(&hetero.node_hw_specialized, 2) + sum_oracle(&hetero.node_sw, 2)
        );
    }

    #[test]
    fn capex_sdn_examples() {
        let book = uniform_book(100.0, 50.0, 60.0, 500.0);
        assert_eq!(capex_sdn(&book, 0), 500.0);
        assert_eq!(capex_sdn(&book, 10), 1100.0);

        // controller = 0 and generic == specialized: the difference is the
        // software bill.
        let same = uniform_book(100.0, 50.0, 100.0, 0.0);
        for n in [0usize, 1, 7, 40] {
            assert_eq!(
                capex_sdn(&same, n),
                capex_manet(&same, n) - sum_oracle(&same.node_sw, n)
            );
        }
    }

    #[test]
    fn breakeven_examples() {
        // controller 500, delta = (100-60)+50 = 90: 6*90 = 540 > 500, 5*90 <= 500.
        let book = uniform_book(100.0, 50.0, 60.0, 500.0);
        assert_eq!(capex_breakeven(&book), Breakeven::At(6));

        // delta = 0: never cheaper.
        let flat = uniform_book(60.0, 0.0, 60.0, 500.0);
        assert_eq!(capex_breakeven(&flat), Breakeven::Never);

        // free controller with positive delta: immediate advantage.
        let free = uniform_book(100.0, 50.0, 60.0, 0.0);
        assert_eq!(capex_breakeven(&free), Breakeven::At(1));
    }

    #[test]
    fn breakeven_matches_linear_scan() {
        // Linear-scan oracle over n for a spread of integer deltas/controllers.
        for (delta_parts, controller) in [
            ((40.0, 50.0, 60.0), 500.0),
            ((1.0, 0.0, 0.0), 1000.0),
            ((0.5, 0.75, 0.25), 333.0),
            ((10.0, 0.0, 5.0), 0.0),
            ((3.0, 4.0, 2.0), 90.0),
        ] {
            let (hw_gap, sw, _unused) = delta_parts;
            let book = uniform_book(60.0 + hw_gap, sw, 60.0, controller);
            let mut oracle = Breakeven::Never;
            for n in 1..200_000u64 {
                if capex_sdn(&book, n as usize) < capex_manet(&book, n as usize) {
                    oracle = Breakeven::At(n);
                    break;
                }
            }
            assert_eq!(capex_breakeven(&book), oracle, "book {book:?}");
        }
    }

    #[test]
    fn breakeven_heterogeneous_tail() {
        // First two nodes carry no advantage, the tail does.
        let book = CostBook {
            node_hw_specialized: CostSchedule::PerNode(vec![60.0, 60.0, 100.0]),
            node_hw_generic: CostSchedule::Uniform(60.0),
            node_sw: CostSchedule::Uniform(0.0),
            controller: 100.0,
            ..CostBook::default()
        };
        let mut oracle = Breakeven::Never;
        for n in 1..10_000u64 {
            if capex_sdn(&book, n as usize) < capex_manet(&book, n as usize) {
                oracle = Breakeven::At(n);
                break;
            }
        }
        assert_eq!(capex_breakeven(&book), oracle);
    }

    #[test]
    fn opex_examples() {
        let mut book = CostBook::default();
        assert_eq!(opex_manet(&book, 0), 0.0);
        assert_eq!(opex_manet(&book, 3), 60.0);

        book.node_maintenance = CostSchedule::PerNode(vec![1.0]);
        book.node_configuration = CostSchedule::PerNode(vec![2.0]);
        book.node_monitoring = CostSchedule::PerNode(vec![3.0]);
        assert_eq!(opex_manet(&book, 1), 6.0);
    }

    #[test]
    fn opex_sdn_examples() {
        let book = CostBook::default();
        assert_eq!(opex_sdn(&book, 0), 40.0);
        assert_eq!(opex_sdn(&book, 5), 50.0);

        let constant = CostBook {
            node_maintenance_reduced: CostSchedule::Uniform(0.0),
            ..CostBook::default()
        };
        assert_eq!(opex_sdn(&constant, 0), opex_sdn(&constant, 100));
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(efficiency_sdn(100.0, 100.0, 1.0).unwrap(), 1.0);
        assert!((efficiency_sdn(80.0, 100.0, 1.2).unwrap() - 0.96).abs() < 1e-12);
        assert_eq!(efficiency_sdn(0.0, 100.0, 1.5).unwrap(), 0.0);
        assert_eq!(
            efficiency_sdn(10.0, 0.0, 1.0),
            Err(EconError::ZeroDenominator)
        );
    }

    #[test]
    fn water_fill_examples() {
        assert_eq!(
            water_fill(&[10.0, 10.0, 10.0], 45.0),
            vec![10.0, 10.0, 10.0]
        );
        assert_eq!(water_fill(&[10.0, 10.0, 10.0], 15.0), vec![5.0, 5.0, 5.0]);
        assert_eq!(water_fill(&[2.0, 10.0, 10.0], 15.0), vec![2.0, 6.5, 6.5]);
    }

    #[test]
    fn water_fill_level_search_oracle() {
        // Oracle: binary search for the level L with sum(min(d, L)) = total.
        let demands = [3.0, 9.5, 1.25, 7.0, 4.5, 8.0];
        let total = 20.0;
        let alloc = water_fill(&demands, total);

        let filled = |level: f64| -> f64 { demands.iter().map(|d| d.min(level)).sum() };
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if filled(mid) < total {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let level = 0.5 * (lo + hi);
        for (a, d) in alloc.iter().zip(demands.iter()) {
            assert!((a - d.min(level)).abs() < 1e-9, "{a} vs min({d}, {level})");
        }
        assert!((alloc.iter().sum::<f64>() - total).abs() < 1e-9);
    }

    #[test]
    fn allocation_cost_examples() {
        let pool = ResourcePool {
            bandwidth_total_bps: 100.0,
            power_total_w: 10.0,
            demands: vec![
                ResourceDemand {
                    bandwidth_bps: 60.0,
                    power_w: 6.0,
                },
                ResourceDemand {
                    bandwidth_bps: 40.0,
                    power_w: 4.0,
                },
            ],
        };
        let full = allocate_resources(&pool);
        assert!((allocation_cost(&full, &pool) - 2.0).abs() < 1e-9);

        let empty = Allocation {
            bandwidth_bps: vec![],
            power_w: vec![],
        };
        assert_eq!(allocation_cost(&empty, &pool), 0.0);

        let half = Allocation {
            bandwidth_bps: vec![50.0],
            power_w: vec![5.0],
        };
        assert!((allocation_cost(&half, &pool) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn security_risk_examples() {
        let none = VulnerabilityProfile::default();
        assert_eq!(security_risk(&none, &BTreeSet::new()), 0.0);

        let profile = VulnerabilityProfile {
            entries: vec![
                Vulnerability {
                    probability: 0.5,
                    impact: 10.0,
                    host: NodeId(0),
                },
                Vulnerability {
                    probability: 0.1,
                    impact: 100.0,
                    host: NodeId(1),
                },
            ],
        };
        assert_eq!(security_risk(&profile, &BTreeSet::new()), 15.0);
        let quarantined: BTreeSet<NodeId> = [NodeId(1)].into();
        assert_eq!(security_risk(&profile, &quarantined), 5.0);

        let single = VulnerabilityProfile {
            entries: vec![profile.entries[0]],
        };
        assert_eq!(security_risk(&single, &BTreeSet::new()), 5.0);
    }

    #[test]
    fn capacity_examples() {
        let book = CapacityBook {
            node_capacity: CostSchedule::Uniform(10.0),
            controller_capacity: 25.0,
            clustered_capacity: 30.0,
            sliced_capacity: 20.0,
        };
        assert_eq!(capacity_sdn(&book, 0), 25.0);
        assert_eq!(capacity_sdn(&book, 4), 65.0);

        let no_controller = CapacityBook {
            controller_capacity: 0.0,
            ..book.clone()
        };
        assert_eq!(
            capacity_sdn(&no_controller, 7),
            sum_oracle(&no_controller.node_capacity, 7)
        );

        assert_eq!(capacity_total(&book), 50.0);
        let zero = CapacityBook {
            clustered_capacity: 0.0,
            sliced_capacity: 0.0,
            ..book.clone()
        };
        assert_eq!(capacity_total(&zero), 0.0);
        let one_sided = CapacityBook {
            clustered_capacity: 42.0,
            sliced_capacity: 0.0,
            ..book
        };
        assert_eq!(capacity_total(&one_sided), 42.0);
    }
}
