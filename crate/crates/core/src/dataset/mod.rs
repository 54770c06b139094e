//! Trace datasets: the in-memory [`TraceSet`], its line-oriented text format
//! and a synthetic tree-shaped generator.

mod format;
mod synth;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{InterfaceAddr, RecordedPath};

pub use format::{parse_trace_file, write_trace_file, ParseError};
pub use synth::{generate_synthetic, SynthError, SynthParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceSetError {
    #[error("duplicate destination {0}")]
    DuplicateDestination(InterfaceAddr),
    #[error("invalid monitor label {0:?}")]
    InvalidMonitorLabel(String),
}

/// All recorded paths of one monitor, in probing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSet {
    monitor_id: String,
    paths: Vec<RecordedPath>,
    index: HashMap<InterfaceAddr, usize>,
}

impl TraceSet {
    pub fn new(
        monitor_id: impl Into<String>,
        paths: Vec<RecordedPath>,
    ) -> Result<Self, TraceSetError> {
        let monitor_id = monitor_id.into();
        if monitor_id.is_empty() || monitor_id.chars().any(char::is_whitespace) {
            return Err(TraceSetError::InvalidMonitorLabel(monitor_id));
        }
        let mut index = HashMap::with_capacity(paths.len());
        for (i, path) in paths.iter().enumerate() {
            if index.insert(path.destination(), i).is_some() {
                return Err(TraceSetError::DuplicateDestination(path.destination()));
            }
        }
        Ok(Self {
            monitor_id,
            paths,
            index,
        })
    }

    pub fn monitor_id(&self) -> &str {
        &self.monitor_id
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Destinations in probing order.
    pub fn destinations(&self) -> impl Iterator<Item = InterfaceAddr> + '_ {
        self.paths.iter().map(RecordedPath::destination)
    }

    /// Paths in probing order.
    pub fn paths(&self) -> &[RecordedPath] {
        &self.paths
    }

    pub fn path(&self, destination: InterfaceAddr) -> Option<&RecordedPath> {
        self.index.get(&destination).map(|&i| &self.paths[i])
    }

    /// Same paths, destination order permuted by a seeded shuffle.
    pub fn shuffled(&self, seed: u64) -> Self {
        let mut paths = self.paths.clone();
        paths.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::new(self.monitor_id.clone(), paths).expect("permutation keeps destinations distinct")
    }

    /// Keeps the paths matching `keep`, preserving order.
    pub fn filtered(&self, keep: impl Fn(&RecordedPath) -> bool) -> Self {
        let paths = self.paths.iter().filter(|p| keep(p)).cloned().collect();
        Self::new(self.monitor_id.clone(), paths).expect("subset keeps destinations distinct")
    }
}
