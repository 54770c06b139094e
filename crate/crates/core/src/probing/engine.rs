use std::collections::BTreeSet;

use super::{
    links_from_observed, replay, DestinationRecord, ProbeObserver, ProbeParams, SearchStopRule,
    StopReason, StopSet, Strategy, StrategyResult, VisitLog,
};
use crate::dataset::TraceSet;
use crate::model::{last_responding_hop, InterfaceAddr, RecordedPath, Ttl, MAX_TTL};

/// State of one strategy run: the stop set and the visit ledger.
struct Session<'o, O: ProbeObserver> {
    params: ProbeParams,
    log: VisitLog,
    stop_set: StopSet,
    records: Vec<DestinationRecord>,
    observer: &'o mut O,
}

/// Per-destination probing; keeps the replies seen for link extraction.
struct Trace<'s, 'o, 'p, O: ProbeObserver> {
    session: &'s mut Session<'o, O>,
    path: &'p RecordedPath,
    observed: Vec<(Ttl, InterfaceAddr)>,
}

impl<O: ProbeObserver> Trace<'_, '_, '_, O> {
    fn probe(&mut self, ttl: Ttl) -> Option<InterfaceAddr> {
        let s = &mut *self.session;
        let reply = replay(self.path, ttl, s.params.probes_per_hop, &mut s.log);
        s.observer.on_probe(self.path.destination(), ttl, reply);
        if let Some(addr) = reply {
            self.observed.push((ttl, addr));
        }
        reply
    }

    /// Probes `ttl` and reports whether the reply was already in the stop set.
    fn probe_and_check(&mut self, ttl: Ttl) -> Option<(InterfaceAddr, bool)> {
        let addr = self.probe(ttl)?;
        Some((addr, self.session.stop_set.check_and_insert(addr)))
    }

    fn forwards_full(&mut self) -> StopReason {
        for ttl in 1..=self.path.len() {
            self.probe_and_check(ttl);
        }
        StopReason::Completed
    }

    fn backwards_from(&mut self, start: Ttl) -> StopReason {
        for ttl in (1..=start).rev() {
            if let Some((addr, true)) = self.probe_and_check(ttl) {
                return StopReason::StopSetHit(addr);
            }
        }
        StopReason::ReachedTtl1
    }

    fn search_from(&mut self, h: Ttl) -> StopReason {
        let rule = self.session.params.search_stop;
        let halt_forward = rule == SearchStopRule::AnyPhase;

        let mut ttl = h.clamp(1, MAX_TTL);
        let (anchor, hit) = loop {
            match self.probe_and_check(ttl) {
                Some((addr, known)) => break (ttl, known.then_some(addr)),
                None if ttl == 1 => return StopReason::NoResponder,
                None => ttl = (ttl / 2).max(1),
            }
        };
        if let (Some(addr), true) = (hit, halt_forward) {
            return StopReason::StopSetHit(addr);
        }

        let mut silent = 0;
        let mut ttl = anchor + 1;
        while silent < self.session.params.gap_limit && ttl <= MAX_TTL {
            match self.probe_and_check(ttl) {
                None => silent += 1,
                Some((addr, true)) if halt_forward => return StopReason::StopSetHit(addr),
                Some(_) => silent = 0,
            }
            ttl += 1;
        }

        match anchor {
            1 => StopReason::ReachedTtl1,
            _ => self.backwards_from(anchor - 1),
        }
    }
}

impl<'o, O: ProbeObserver> Session<'o, O> {
    fn new(params: &ProbeParams, observer: &'o mut O) -> Self {
        Self {
            params: *params,
            log: VisitLog::default(),
            stop_set: StopSet::default(),
            records: Vec::new(),
            observer,
        }
    }

    fn trace(&mut self, path: &RecordedPath, f: impl FnOnce(&mut Trace<'_, 'o, '_, O>) -> StopReason) {
        let mut trace = Trace {
            session: self,
            path,
            observed: Vec::new(),
        };
        let reason = f(&mut trace);
        let observed = trace.observed;
        self.records.push(DestinationRecord {
            destination: path.destination(),
            reason,
            observed,
        });
    }

    fn skip(&mut self, path: &RecordedPath, reason: StopReason) {
        self.records.push(DestinationRecord {
            destination: path.destination(),
            reason,
            observed: Vec::new(),
        });
    }

    fn standard(&mut self, path: &RecordedPath) {
        self.trace(path, |t| t.forwards_full());
    }

    fn pure_backwards(&mut self, path: &RecordedPath) {
        match last_responding_hop(path) {
            Some(last) => self.trace(path, |t| t.backwards_from(last)),
            None => self.skip(path, StopReason::NoResponder),
        }
    }

    fn ordinary_backwards(&mut self, path: &RecordedPath) {
        match path.dest_hop() {
            Some(hop) => self.trace(path, |t| t.backwards_from(hop)),
            None => self.skip(path, StopReason::DestinationSkipped),
        }
    }

    fn searching(&mut self, path: &RecordedPath, h: Ttl) {
        self.trace(path, |t| t.search_from(h));
    }

    fn finish(self, strategy: Strategy, start_hop: Option<Ttl>) -> StrategyResult {
        let discovered_interfaces: BTreeSet<_> = self.log.visits.keys().map(|(a, _)| *a).collect();
        let discovered_links = self
            .records
            .iter()
            .flat_map(|r| links_from_observed(&r.observed))
            .collect();
        StrategyResult {
            strategy_name: strategy.name().to_string(),
            discovered_interfaces,
            discovered_links,
            visit_log: self.log,
            per_destination: self.records,
            start_hop,
        }
    }
}

/// Mean of the warm-up traces' last replies, rounded half up.
fn start_hop_from_warmup(warmup: &[RecordedPath]) -> Ttl {
    fn rounded_mean(values: impl Iterator<Item = Ttl>) -> Option<Ttl> {
        let (sum, count) = values.fold((0u64, 0u64), |(s, c), v| (s + u64::from(v), c + 1));
        (count > 0).then(|| ((2 * sum + count) / (2 * count)) as Ttl)
    }
    let incomplete = warmup
        .iter()
        .filter(|p| !p.dest_responded())
        .filter_map(last_responding_hop);
    rounded_mean(incomplete)
        .or_else(|| rounded_mean(warmup.iter().map(RecordedPath::len)))
        .unwrap_or(1)
        .max(1)
}

/// Start hop for the searching strategy, estimated from standard traces to the
/// first `warmup_count` destinations.
///
/// Uses the mean last-responding hop of warm-up traces whose destination stayed
/// silent, or the mean path length if every warm-up destination replied.
pub fn tune_h(ts: &TraceSet, warmup_count: usize) -> Ttl {
    let n = warmup_count.max(1).min(ts.len());
    start_hop_from_warmup(&ts.paths()[..n])
}

pub fn run_strategy<O: ProbeObserver>(
    ts: &TraceSet,
    strategy: Strategy,
    params: &ProbeParams,
    observer: &mut O,
) -> StrategyResult {
    let mut session = Session::new(params, observer);
    let mut start_hop = None;
    match strategy {
        Strategy::Standard => ts.paths().iter().for_each(|p| session.standard(p)),
        Strategy::PureBackwards => ts.paths().iter().for_each(|p| session.pure_backwards(p)),
        Strategy::OrdinaryBackwards => ts.paths().iter().for_each(|p| session.ordinary_backwards(p)),
        Strategy::Searching(h) => {
            let h = h.unwrap_or_else(|| tune_h(ts, params.warmup_for(ts.len())));
            start_hop = Some(h);
            ts.paths().iter().for_each(|p| session.searching(p, h));
        }
        Strategy::SearchingOrdinaryBackwards(fixed) => {
            let rest = match fixed {
                Some(h) => {
                    start_hop = Some(h.max(1));
                    ts.paths()
                }
                None => {
                    let n = params.warmup_for(ts.len()).min(ts.len());
                    let (warmup, rest) = ts.paths().split_at(n);
                    warmup.iter().for_each(|p| session.standard(p));
                    start_hop = Some(start_hop_from_warmup(warmup));
                    rest
                }
            };
            let h = start_hop.expect("set above");
            for path in rest {
                if path.dest_responded() {
                    session.ordinary_backwards(path);
                } else {
                    session.searching(path, h);
                }
            }
        }
    }
    session.finish(strategy, start_hop)
}

/// Forward tracing from TTL 1 to the end of every recorded path.
pub fn run_standard(ts: &TraceSet, params: &ProbeParams) -> StrategyResult {
    run_strategy(ts, Strategy::Standard, params, &mut ())
}

/// Backwards probing from each path's last responding hop, known in advance.
pub fn run_pure_backwards(ts: &TraceSet, params: &ProbeParams) -> StrategyResult {
    run_strategy(ts, Strategy::PureBackwards, params, &mut ())
}

/// Backwards probing from responding destinations; silent ones are skipped.
pub fn run_ordinary_backwards(ts: &TraceSet, params: &ProbeParams) -> StrategyResult {
    run_strategy(ts, Strategy::OrdinaryBackwards, params, &mut ())
}

/// Search every destination starting at hop `h`: forwards to the last
/// reply, then backwards from below the first reply. `h` is halved while
/// the probe goes unanswered.
pub fn run_searching(ts: &TraceSet, h: Ttl, params: &ProbeParams) -> StrategyResult {
    run_strategy(ts, Strategy::Searching(Some(h.max(1))), params, &mut ())
}

/// Warm-up standard traces, then ordinary backwards for responding
/// destinations and searching for silent ones, sharing one stop set.
pub fn run_searching_ordinary_backwards(ts: &TraceSet, params: &ProbeParams) -> StrategyResult {
    run_strategy(ts, Strategy::SearchingOrdinaryBackwards(None), params, &mut ())
}
