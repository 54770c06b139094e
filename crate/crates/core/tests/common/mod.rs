#![allow(dead_code)]

use backtrace_sim::dataset::{generate_synthetic, SynthParams, TraceSet};
use backtrace_sim::model::{HopResponse, InterfaceAddr, RecordedPath};
use proptest::prelude::*;

pub fn synth(seed: u64, n: usize, dnr: f64, hnr: f64) -> TraceSet {
    generate_synthetic(&SynthParams {
        n_destinations: n,
        dest_nonresponse_rate: dnr,
        hop_nonresponse_rate: hnr,
        seed,
        ..SynthParams::default()
    })
    .unwrap()
}

/// Small arbitrary trace sets. Addresses are drawn from a narrow pool so
/// paths share interfaces often, and include special-use ones.
pub fn arb_trace_set() -> impl Strategy<Value = TraceSet> {
    let hop = prop_oneof![
        1 => Just(None),
        6 => (0u32..24).prop_map(Some),
        1 => (0u32..4).prop_map(|i| Some(0x0A00_0000 + i)),
    ];
    let path = (proptest::collection::vec(hop, 1..12), any::<bool>());
    proptest::collection::vec(path, 0..25).prop_map(|raw| {
        let paths = raw
            .into_iter()
            .enumerate()
            .map(|(i, (hops, responded))| {
                let dest = InterfaceAddr::new(0x0900_0000 + i as u32);
                let mut hops: Vec<HopResponse> = hops
                    .into_iter()
                    .map(|h| match h {
                        None => HopResponse::Silent,
                        Some(v) if v >= 0x0A00_0000 => HopResponse::Responding(InterfaceAddr::new(v)),
                        Some(v) => HopResponse::Responding(InterfaceAddr::new(0x0100_0000 + v)),
                    })
                    .collect();
                if responded {
                    hops.push(HopResponse::Responding(dest));
                }
                RecordedPath::new(dest, hops, responded).unwrap()
            })
            .collect();
        TraceSet::new("arb", paths).unwrap()
    })
}
