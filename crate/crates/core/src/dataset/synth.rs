//! Synthetic ground truth shaped like traceroutes from one vantage point.
//!
//! Routes are drawn from an incrementally grown random trie rooted at the
//! monitor. Every router is created with a fixed number of child slots (mean
//! `branching_factor`); a new route walks down from the single first-hop
//! gateway by picking slots uniformly, following existing branches while the
//! chosen slot is occupied and minting fresh interfaces once it is not. The
//! destination hangs as a unique leaf below the last router.
//!
//! Non-response is drawn once per recorded path: the destination stays silent
//! with `dest_nonresponse_rate`, and each intermediate hop of each path is
//! silent independently with `hop_nonresponse_rate`. A silent destination's
//! record is cut after its deepest responding hop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

use super::TraceSet;
use crate::model::{classify_address, AddressClass, HopResponse, InterfaceAddr, RecordedPath};

const MIN_DEPTH: u32 = 2;
const MAX_DEPTH: u32 = 64;
const FIRST_ADDRESS: u32 = 0x0100_0001; // 1.0.0.1

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_destinations: usize,
    pub mean_depth: f64,
    pub depth_spread: f64,
    pub branching_factor: f64,
    pub dest_nonresponse_rate: f64,
    pub hop_nonresponse_rate: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_destinations: 5_000,
            mean_depth: 17.0,
            depth_spread: 3.0,
            branching_factor: 2.0,
            dest_nonresponse_rate: 0.4,
            hop_nonresponse_rate: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("n_destinations must be at least 1")]
    NoDestinations,
    #[error("mean_depth must be at least {MIN_DEPTH}, got {0}")]
    MeanDepth(f64),
    #[error("depth_spread must be finite and non-negative, got {0}")]
    DepthSpread(f64),
    #[error("branching_factor must be at least 1, got {0}")]
    BranchingFactor(f64),
    #[error("{name} must be in [0, 1], got {value}")]
    Rate { name: &'static str, value: f64 },
    #[error("address space exhausted")]
    AddressSpace,
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_destinations == 0 {
            return Err(SynthError::NoDestinations);
        }
        if !(self.mean_depth >= f64::from(MIN_DEPTH) && self.mean_depth.is_finite()) {
            return Err(SynthError::MeanDepth(self.mean_depth));
        }
        if !(self.depth_spread >= 0.0 && self.depth_spread.is_finite()) {
            return Err(SynthError::DepthSpread(self.depth_spread));
        }
        if !(self.branching_factor >= 1.0 && self.branching_factor.is_finite()) {
            return Err(SynthError::BranchingFactor(self.branching_factor));
        }
        for (name, value) in [
            ("dest_nonresponse_rate", self.dest_nonresponse_rate),
            ("hop_nonresponse_rate", self.hop_nonresponse_rate),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::Rate { name, value });
            }
        }
        Ok(())
    }
}

struct AddressPool {
    next: u64,
}

impl AddressPool {
    fn take(&mut self) -> Result<InterfaceAddr, SynthError> {
        loop {
            let value = u32::try_from(self.next).map_err(|_| SynthError::AddressSpace)?;
            let addr = InterfaceAddr::new(value);
            match classify_address(addr) {
                AddressClass::Valid => {
                    self.next += 1;
                    return Ok(addr);
                }
                AddressClass::SpecialUse(block) => {
                    let size = 1u64 << (32 - u32::from(block.len));
                    self.next = u64::from(block.network.value()) + size;
                }
            }
        }
    }
}

struct Router {
    addr: InterfaceAddr,
    slots: Vec<Option<usize>>,
}

struct Trie<'a> {
    routers: Vec<Router>,
    slot_count: Option<Poisson<f64>>,
    pool: &'a mut AddressPool,
}

impl Trie<'_> {
    fn add_router(&mut self, rng: &mut ChaCha8Rng) -> Result<usize, SynthError> {
        let extra = self.slot_count.map_or(0, |d| d.sample(rng) as usize);
        let addr = self.pool.take()?;
        self.routers.push(Router {
            addr,
            slots: vec![None; 1 + extra],
        });
        Ok(self.routers.len() - 1)
    }

    /// Router interfaces for TTLs 1..=hops, starting at the gateway.
    fn route(&mut self, hops: u32, rng: &mut ChaCha8Rng) -> Result<Vec<InterfaceAddr>, SynthError> {
        let mut out = Vec::with_capacity(hops as usize);
        let mut current = 0;
        out.push(self.routers[0].addr);
        for _ in 1..hops {
            let slot = rng.random_range(0..self.routers[current].slots.len());
            current = match self.routers[current].slots[slot] {
                Some(child) => child,
                None => {
                    let child = self.add_router(rng)?;
                    self.routers[current].slots[slot] = Some(child);
                    child
                }
            };
            out.push(self.routers[current].addr);
        }
        Ok(out)
    }
}

pub fn generate_synthetic(p: &SynthParams) -> Result<TraceSet, SynthError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let depth = Normal::new(p.mean_depth, p.depth_spread).expect("validated spread");
    let extra_slots = p.branching_factor - 1.0;
    let mut pool = AddressPool {
        next: u64::from(FIRST_ADDRESS),
    };
    let mut trie = Trie {
        routers: Vec::new(),
        slot_count: (extra_slots > 0.0).then(|| Poisson::new(extra_slots).expect("positive rate")),
        pool: &mut pool,
    };
    trie.add_router(&mut rng)?;

    let mut paths = Vec::with_capacity(p.n_destinations);
    for _ in 0..p.n_destinations {
        let length = (depth.sample(&mut rng).round().clamp(f64::from(MIN_DEPTH), f64::from(MAX_DEPTH))) as u32;
        let routers = trie.route(length - 1, &mut rng)?;
        let destination = trie.pool.take()?;
        let dest_responded = !rng.random_bool(p.dest_nonresponse_rate);

        let mut hops: Vec<HopResponse> = routers
            .into_iter()
            .map(|addr| {
                if rng.random_bool(p.hop_nonresponse_rate) {
                    HopResponse::Silent
                } else {
                    HopResponse::Responding(addr)
                }
            })
            .collect();
        if dest_responded {
            hops.push(HopResponse::Responding(destination));
        } else {
            let keep = hops
                .iter()
                .rposition(|h| matches!(h, HopResponse::Responding(_)))
                .map_or(1, |i| i + 1);
            hops.truncate(keep);
        }
        let path = RecordedPath::new(destination, hops, dest_responded)
            .expect("generator upholds path invariants");
        paths.push(path);
    }
    Ok(TraceSet::new(format!("synth-{}", p.seed), paths).expect("fresh destination addresses"))
}
