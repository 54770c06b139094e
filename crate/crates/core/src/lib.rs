//! Deterministic replay of single-monitor route-tracing strategies.
//!
//! A [`dataset::TraceSet`] holds the ground-truth path to every destination.
//! The [`probing`] strategies replay probes against it while keeping a stop
//! set of visited interfaces, and [`metrics`] turns their visit ledgers into
//! redundancy distributions, loss reports and a cross-strategy comparison.

pub mod cli;
pub mod dataset;
pub mod metrics;
pub mod model;
pub mod probing;

pub use dataset::{generate_synthetic, parse_trace_file, write_trace_file, SynthParams, TraceSet};
pub use model::{classify_address, effective_response, last_responding_hop, InterfaceAddr, RecordedPath, Ttl};
pub use probing::{ProbeParams, Strategy, StrategyResult};
