mod common;

use std::collections::{BTreeMap, BTreeSet};

use backtrace_sim::metrics::{
    comparison_table, incomplete_path_distribution, missed_report, quantile, redundancy_distribution,
    QuantileSummary,
};
use backtrace_sim::probing::{run_standard, run_strategy, ProbeParams, Strategy};
use common::{arb_trace_set, synth};
use proptest::prelude::*;

proptest! {
    #[test]
    fn quantile_returns_sample_element(mut v in proptest::collection::vec(any::<i32>(), 1..200), q in 0.0..=1.0f64) {
        v.sort_unstable();
        let got = quantile(&v, q).unwrap();
        prop_assert!(v.binary_search(&got).is_ok());
    }

    #[test]
    fn summary_is_monotone(v in proptest::collection::vec(0u64..1000, 1..200)) {
        let s = QuantileSummary::from_values(&v).unwrap();
        prop_assert!(s.values().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(s.values().iter().all(|x| v.contains(x)));
        prop_assert_eq!(s.count, v.len());
    }

    #[test]
    fn redundancy_totals_match(ts in arb_trace_set(), ppp in 1u32..4) {
        let p = ProbeParams { probes_per_hop: ppp, ..ProbeParams::default() };
        for s in Strategy::ALL {
            let r = run_strategy(&ts, s, &p, &mut ());
            let d = redundancy_distribution(&r);
            prop_assert_eq!(d.total_visits(), r.visit_log.responding_probes);
            for bin in d.per_distance.values() {
                prop_assert_eq!(bin.interface_count, bin.visits.len());
                prop_assert_eq!(bin.summary.count, bin.interface_count);
            }
        }
    }

    #[test]
    fn standard_bins_count_distinct_addresses(ts in arb_trace_set()) {
        let r = run_standard(&ts, &ProbeParams::default());
        let mut expected: BTreeMap<u32, BTreeSet<_>> = BTreeMap::new();
        for p in ts.paths() {
            for t in 1..=p.len() {
                if let Some(a) = p.effective_at(t) {
                    expected.entry(t).or_default().insert(a);
                }
            }
        }
        let d = redundancy_distribution(&r);
        let got: BTreeMap<u32, usize> = d.per_distance.iter().map(|(t, b)| (*t, b.interface_count)).collect();
        let want: BTreeMap<u32, usize> = expected.iter().map(|(t, s)| (*t, s.len())).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn comparison_rows_are_bounded(ts in arb_trace_set()) {
        let p = ProbeParams::default();
        let reference = run_standard(&ts, &p);
        let results: Vec<_> = Strategy::ALL.iter().map(|&s| run_strategy(&ts, s, &p, &mut ())).collect();
        for row in comparison_table(&results, &reference) {
            prop_assert!((0.0..=1.0).contains(&row.prop_missed));
            if let Some(m) = row.mean_visits {
                prop_assert!(m >= 1.0);
            }
        }
        let m = missed_report(&reference, &reference);
        prop_assert_eq!(m.pct_interfaces_missed, 0.0);
        prop_assert_eq!(m.pct_links_missed, 0.0);
    }
}

#[test]
fn incomplete_mass_tracks_nonresponse_rate() {
    let n = 2_000;
    let ts = synth(21, n, 0.4, 0.05);
    let total = incomplete_path_distribution(&ts).total() as f64;
    assert!((total - 0.4 * n as f64).abs() <= 0.05 * n as f64, "{total}");
}
