//! Redundancy distributions, losses against a reference run, and the
//! cross-strategy comparison.

mod quantile;

use std::collections::{BTreeMap, BTreeSet};

use crate::dataset::TraceSet;
use crate::model::{last_responding_hop, InterfaceAddr, Ttl};
use crate::probing::{links_from_observed, Link, StrategyResult};

pub use quantile::{quantile, quantile_index, QuantileError, QuantileSummary};

/// Interfaces seen at one hop distance and how often each was visited there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceBin {
    pub interface_count: usize,
    /// Per-interface visit totals at this distance, ordered by address.
    pub visits: Vec<(InterfaceAddr, u64)>,
    pub summary: QuantileSummary,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RedundancyDistribution {
    pub per_distance: BTreeMap<Ttl, DistanceBin>,
}

impl RedundancyDistribution {
    pub fn total_visits(&self) -> u64 {
        self.per_distance
            .values()
            .flat_map(|b| b.visits.iter().map(|(_, v)| v))
            .sum()
    }
}

/// Bins visits by the distance they occurred at. An interface answering at
/// two distances shows up in both bins.
pub fn redundancy_distribution(r: &StrategyResult) -> RedundancyDistribution {
    let mut by_ttl: BTreeMap<Ttl, Vec<(InterfaceAddr, u64)>> = BTreeMap::new();
    for (&(addr, ttl), &count) in &r.visit_log.visits {
        by_ttl.entry(ttl).or_default().push((addr, count));
    }
    let per_distance = by_ttl
        .into_iter()
        .map(|(ttl, mut visits)| {
            visits.sort_unstable();
            let counts: Vec<u64> = visits.iter().map(|(_, v)| *v).collect();
            let summary = QuantileSummary::from_values(&counts).expect("bins are non-empty");
            let bin = DistanceBin {
                interface_count: visits.len(),
                visits,
                summary,
            };
            (ttl, bin)
        })
        .collect();
    RedundancyDistribution { per_distance }
}

/// Interfaces and links a strategy missed relative to a reference run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissedReport {
    pub total_interfaces: usize,
    pub discovered_interfaces: usize,
    pub pct_interfaces_missed: f64,
    pub total_links: usize,
    pub discovered_links: usize,
    pub pct_links_missed: f64,
}

/// `100 (total - discovered) / total`; zero when there is nothing to miss.
pub fn pct_missed(total: usize, discovered: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * (total - discovered.min(total)) as f64 / total as f64
    }
}

/// Losses of `r` against `reference`, normally a standard run on the same data.
pub fn missed_report(r: &StrategyResult, reference: &StrategyResult) -> MissedReport {
    let total_interfaces = reference.discovered_interfaces.len();
    let discovered_interfaces = reference
        .discovered_interfaces
        .intersection(&r.discovered_interfaces)
        .count();
    let total_links = reference.discovered_links.len();
    let discovered_links = reference
        .discovered_links
        .intersection(&r.discovered_links)
        .count();
    MissedReport {
        total_interfaces,
        discovered_interfaces,
        pct_interfaces_missed: pct_missed(total_interfaces, discovered_interfaces),
        total_links,
        discovered_links,
        pct_links_missed: pct_missed(total_links, discovered_links),
    }
}

/// One strategy's redundancy/loss trade-off.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub strategy_name: String,
    /// Responding probes per discovered interface; `None` if nothing was found.
    pub mean_visits: Option<f64>,
    /// Share of the reference interfaces not discovered, in `[0, 1]`.
    pub prop_missed: f64,
    pub probes_sent: u64,
    pub discovered_interfaces: usize,
}

pub fn comparison_row(r: &StrategyResult, reference: &StrategyResult) -> ComparisonRow {
    let discovered = r.discovered_interfaces.len();
    let mean_visits =
        (discovered > 0).then(|| r.visit_log.responding_probes as f64 / discovered as f64);
    let reference_total = reference.discovered_interfaces.len();
    let prop_missed = if reference_total == 0 {
        0.0
    } else {
        let hit = reference
            .discovered_interfaces
            .intersection(&r.discovered_interfaces)
            .count();
        1.0 - hit as f64 / reference_total as f64
    };
    ComparisonRow {
        strategy_name: r.strategy_name.clone(),
        mean_visits,
        prop_missed,
        probes_sent: r.visit_log.probes_sent,
        discovered_interfaces: discovered,
    }
}

pub fn comparison_table(results: &[StrategyResult], reference: &StrategyResult) -> Vec<ComparisonRow> {
    results.iter().map(|r| comparison_row(r, reference)).collect()
}

/// Last-responding-hop histogram over traces whose destination never replied.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IncompleteDistribution {
    pub by_last_hop: BTreeMap<Ttl, u64>,
    /// Incomplete traces with no valid reply at all.
    pub no_responder: u64,
}

impl IncompleteDistribution {
    pub fn total(&self) -> u64 {
        self.by_last_hop.values().sum::<u64>() + self.no_responder
    }
}

pub fn incomplete_path_distribution(ts: &TraceSet) -> IncompleteDistribution {
    let mut dist = IncompleteDistribution::default();
    for path in ts.paths().iter().filter(|p| !p.dest_responded()) {
        match last_responding_hop(path) {
            Some(ttl) => *dist.by_last_hop.entry(ttl).or_default() += 1,
            None => dist.no_responder += 1,
        }
    }
    dist
}

/// Distinct directed links between consecutive-TTL replies of each probed
/// destination.
pub fn extract_links(r: &StrategyResult) -> BTreeSet<Link> {
    r.per_destination
        .iter()
        .flat_map(|d| links_from_observed(&d.observed))
        .collect()
}
