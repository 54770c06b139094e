//! Probe replay and the single-monitor tracing strategies.
//!
//! Every strategy walks the destinations of a [`TraceSet`] in order, replaying
//! probes against the recorded paths and keeping one stop set for the whole
//! run. Backwards probing ends a destination as soon as a probe returns an
//! interface that was already in the stop set; that probe still counts as a
//! visit.

mod engine;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::TraceSet;
use crate::model::{classify_address, InterfaceAddr, RecordedPath, Ttl};

pub use engine::{
    run_ordinary_backwards, run_pure_backwards, run_searching, run_searching_ordinary_backwards,
    run_standard, run_strategy, tune_h,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbeError {
    #[error("unknown destination {0}")]
    UnknownDestination(InterfaceAddr),
    #[error("TTL must be at least 1")]
    ZeroTtl,
}

/// How a stop-set hit during the forward phase of a search is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStopRule {
    /// Any hit, forward or backward, ends the destination.
    AnyPhase,
    /// Forward probing runs until the silence gap; only backward hits stop.
    #[default]
    BackwardOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeParams {
    /// Probes sent per TTL; each reply is one visit.
    pub probes_per_hop: u32,
    /// Consecutive silent TTLs that end a forward search.
    pub gap_limit: u32,
    /// Standard traces used to tune the search start hop. `None` means
    /// `min(1000, ceil(0.02 * destinations))`.
    pub warmup_count: Option<usize>,
    pub search_stop: SearchStopRule,
}

impl Default for ProbeParams {
    fn default() -> Self {
        Self {
            probes_per_hop: 1,
            gap_limit: 3,
            warmup_count: None,
            search_stop: SearchStopRule::BackwardOnly,
        }
    }
}

impl ProbeParams {
    pub fn warmup_for(&self, destinations: usize) -> usize {
        self.warmup_count
            .unwrap_or_else(|| destinations.div_ceil(50).min(1000))
            .max(1)
    }
}

/// Interfaces already visited by the monitor during the current run.
#[derive(Debug, Clone, Default)]
pub struct StopSet {
    members: HashSet<InterfaceAddr>,
}

impl StopSet {
    pub fn contains(&self, addr: InterfaceAddr) -> bool {
        self.members.contains(&addr)
    }

    /// Inserts a valid address. Returns `true` if it was already a member.
    pub fn check_and_insert(&mut self, addr: InterfaceAddr) -> bool {
        debug_assert!(classify_address(addr).is_valid());
        !self.members.insert(addr)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Visit counters keyed by interface and the TTL it answered at.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VisitLog {
    pub visits: BTreeMap<(InterfaceAddr, Ttl), u64>,
    pub probes_sent: u64,
    pub responding_probes: u64,
}

impl VisitLog {
    pub fn total_visits(&self) -> u64 {
        self.visits.values().sum()
    }

    /// Visits to `addr` summed over all distances.
    pub fn visits_to(&self, addr: InterfaceAddr) -> u64 {
        self.visits
            .range((addr, 0)..=(addr, Ttl::MAX))
            .map(|(_, v)| v)
            .sum()
    }

    fn record(&mut self, ttl: Ttl, reply: Option<InterfaceAddr>, probes: u32) {
        let probes = u64::from(probes);
        self.probes_sent += probes;
        if let Some(addr) = reply {
            self.responding_probes += probes;
            *self.visits.entry((addr, ttl)).or_default() += probes;
        }
    }
}

/// Directed adjacency between replies at TTL `t` and `t + 1` of one trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub near: InterfaceAddr,
    pub far: InterfaceAddr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedTtl1,
    StopSetHit(InterfaceAddr),
    DestinationSkipped,
    NoResponder,
    Completed,
}

/// Outcome of probing one destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DestinationRecord {
    pub destination: InterfaceAddr,
    pub reason: StopReason,
    /// Valid replies seen while probing this destination, in probe order.
    pub observed: Vec<(Ttl, InterfaceAddr)>,
}

/// Links between replies at consecutive TTLs of one destination's probing.
pub fn links_from_observed(observed: &[(Ttl, InterfaceAddr)]) -> Vec<Link> {
    let by_ttl: BTreeMap<Ttl, InterfaceAddr> = observed.iter().copied().collect();
    by_ttl
        .iter()
        .zip(by_ttl.iter().skip(1))
        .filter(|((t, _), (u, _))| **u == **t + 1)
        .map(|((_, near), (_, far))| Link {
            near: *near,
            far: *far,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyResult {
    pub strategy_name: String,
    pub discovered_interfaces: BTreeSet<InterfaceAddr>,
    pub discovered_links: BTreeSet<Link>,
    pub visit_log: VisitLog,
    /// One record per probed destination, in probing order.
    pub per_destination: Vec<DestinationRecord>,
    /// Start hop used by searching strategies.
    pub start_hop: Option<Ttl>,
}

impl StrategyResult {
    pub fn reason_for(&self, destination: InterfaceAddr) -> Option<StopReason> {
        self.per_destination
            .iter()
            .find(|r| r.destination == destination)
            .map(|r| r.reason)
    }
}

/// The tracing strategies a run can select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Standard,
    PureBackwards,
    OrdinaryBackwards,
    /// Search from a start hop; `None` tunes it with warm-up traces.
    Searching(Option<Ttl>),
    /// Backwards for responding destinations, searching for silent ones.
    /// `None` tunes the start hop with warm-up traces charged to the run.
    SearchingOrdinaryBackwards(Option<Ttl>),
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Standard,
        Strategy::PureBackwards,
        Strategy::OrdinaryBackwards,
        Strategy::Searching(None),
        Strategy::SearchingOrdinaryBackwards(None),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Standard => "standard",
            Strategy::PureBackwards => "pure-backwards",
            Strategy::OrdinaryBackwards => "ordinary-backwards",
            Strategy::Searching(_) => "searching",
            Strategy::SearchingOrdinaryBackwards(_) => "searching-ordinary-backwards",
        }
    }
    /// The same strategy with its start hop fixed; no-op for the others.
    pub fn with_start_hop(self, h: Ttl) -> Self {
        match self {
            Strategy::Searching(_) => Strategy::Searching(Some(h)),
            Strategy::SearchingOrdinaryBackwards(_) => Strategy::SearchingOrdinaryBackwards(Some(h)),
            other => other,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown strategy {0:?}")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

/// Receives every probe a strategy sends, in order.
pub trait ProbeObserver {
    fn on_probe(&mut self, destination: InterfaceAddr, ttl: Ttl, reply: Option<InterfaceAddr>);
}

impl ProbeObserver for () {
    fn on_probe(&mut self, _: InterfaceAddr, _: Ttl, _: Option<InterfaceAddr>) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeEvent {
    pub destination: InterfaceAddr,
    pub ttl: Ttl,
    pub reply: Option<InterfaceAddr>,
}

impl ProbeObserver for Vec<ProbeEvent> {
    fn on_probe(&mut self, destination: InterfaceAddr, ttl: Ttl, reply: Option<InterfaceAddr>) {
        self.push(ProbeEvent {
            destination,
            ttl,
            reply,
        });
    }
}

fn replay(path: &RecordedPath, ttl: Ttl, probes: u32, log: &mut VisitLog) -> Option<InterfaceAddr> {
    let reply = path.effective_at(ttl);
    log.record(ttl, reply, probes);
    reply
}

/// Replays `probes_per_hop` probes towards `destination` with the given TTL.
pub fn probe(
    ts: &TraceSet,
    destination: InterfaceAddr,
    ttl: Ttl,
    params: &ProbeParams,
    log: &mut VisitLog,
) -> Result<Option<InterfaceAddr>, ProbeError> {
    if ttl == 0 {
        return Err(ProbeError::ZeroTtl);
    }
    let path = ts
        .path(destination)
        .ok_or(ProbeError::UnknownDestination(destination))?;
    Ok(replay(path, ttl, params.probes_per_hop, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HopResponse;

    fn a(s: &str) -> InterfaceAddr {
        s.parse().unwrap()
    }

    fn one_path(hops: &[&str]) -> TraceSet {
        let hops: Vec<_> = hops.iter().map(|h| HopResponse::Responding(a(h))).collect();
        let dest = match hops.last() {
            Some(HopResponse::Responding(d)) => *d,
            _ => unreachable!(),
        };
        TraceSet::new("t", vec![RecordedPath::new(dest, hops, true).unwrap()]).unwrap()
    }

    #[test]
    fn probe_replays_recorded_hop() {
        let ts = one_path(&["1.0.0.1", "1.0.0.2", "9.0.0.1"]);
        let mut log = VisitLog::default();
        let p = ProbeParams::default();
        assert_eq!(probe(&ts, a("9.0.0.1"), 2, &p, &mut log), Ok(Some(a("1.0.0.2"))));
        assert_eq!(log.visits[&(a("1.0.0.2"), 2)], 1);
        assert_eq!(probe(&ts, a("9.0.0.1"), 5, &p, &mut log), Ok(None));
        assert_eq!(log.probes_sent, 2);
        assert_eq!(log.responding_probes, 1);
    }

    #[test]
    fn probe_filters_special_use() {
        let ts = one_path(&["10.0.0.1", "9.0.0.1"]);
        let mut log = VisitLog::default();
        let p = ProbeParams {
            probes_per_hop: 3,
            ..ProbeParams::default()
        };
        assert_eq!(probe(&ts, a("9.0.0.1"), 1, &p, &mut log), Ok(None));
        assert_eq!(log.probes_sent, 3);
        assert!(log.visits.is_empty());
    }

    #[test]
    fn probe_errors() {
        let ts = one_path(&["9.0.0.1"]);
        let mut log = VisitLog::default();
        let p = ProbeParams::default();
        assert_eq!(
            probe(&ts, a("8.8.8.8"), 1, &p, &mut log),
            Err(ProbeError::UnknownDestination(a("8.8.8.8")))
        );
        assert_eq!(probe(&ts, a("9.0.0.1"), 0, &p, &mut log), Err(ProbeError::ZeroTtl));
    }

    #[test]
    fn links_need_adjacent_ttls() {
        let (x, y, z) = (a("1.0.0.1"), a("1.0.0.2"), a("1.0.0.3"));
        assert_eq!(
            links_from_observed(&[(3, z), (2, y), (1, x)]),
            vec![Link { near: x, far: y }, Link { near: y, far: z }]
        );
        assert!(links_from_observed(&[(1, x), (3, z)]).is_empty());
    }

    #[test]
    fn warmup_default() {
        let p = ProbeParams::default();
        assert_eq!(p.warmup_for(5_000), 100);
        assert_eq!(p.warmup_for(49), 1);
        assert_eq!(p.warmup_for(0), 1);
        assert_eq!(p.warmup_for(10_000_000), 1000);
        let fixed = ProbeParams {
            warmup_count: Some(7),
            ..p
        };
        assert_eq!(fixed.warmup_for(5_000), 7);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("doubletree".parse::<Strategy>().is_err());
    }

    #[test]
    fn stop_set_reports_prior_membership() {
        let mut s = StopSet::default();
        assert!(!s.check_and_insert(a("1.0.0.1")));
        assert!(s.check_and_insert(a("1.0.0.1")));
        assert_eq!(s.len(), 1);
    }
}
