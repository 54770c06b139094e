//! Addresses, hops and recorded paths.
//!
//! A [`RecordedPath`] is the ground truth a strategy is replayed against. The
//! rules here decide which recorded replies count as visits: silent hops and
//! replies from special-use IPv4 space are both treated as non-responding.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use thiserror::Error;

/// Hop distance from the monitor. The first hop is TTL 1.
pub type Ttl = u32;

/// Largest TTL an IPv4 probe can carry.
pub const MAX_TTL: Ttl = 255;

/// An IPv4 interface address, stored as a host-order integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InterfaceAddr(u32);

impl InterfaceAddr {
    pub const fn new(value: u32) -> Self {
        Self(value)
    }

    pub const fn from_octets(a: u8, b: u8, c: u8, d: u8) -> Self {
        Self(u32::from_be_bytes([a, b, c, d]))
    }

    pub const fn value(self) -> u32 {
        self.0
    }
}

impl From<Ipv4Addr> for InterfaceAddr {
    fn from(addr: Ipv4Addr) -> Self {
        Self(u32::from(addr))
    }
}

impl From<InterfaceAddr> for Ipv4Addr {
    fn from(addr: InterfaceAddr) -> Self {
        Ipv4Addr::from(addr.0)
    }
}

impl fmt::Display for InterfaceAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Ipv4Addr::from(self.0).fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid dotted-quad address {0:?}")]
pub struct AddrParseError(pub String);

impl FromStr for InterfaceAddr {
    type Err = AddrParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ipv4Addr::from_str(s)
            .map(Self::from)
            .map_err(|_| AddrParseError(s.to_string()))
    }
}

/// An IPv4 prefix such as `10.0.0.0/8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Prefix {
    pub network: InterfaceAddr,
    pub len: u8,
}

impl Prefix {
    pub const fn new(network: InterfaceAddr, len: u8) -> Self {
        Self { network, len }
    }

    fn mask(self) -> u32 {
        match self.len {
            0 => 0,
            n => u32::MAX << (32 - u32::from(n)),
        }
    }

    pub fn contains(self, addr: InterfaceAddr) -> bool {
        addr.value() & self.mask() == self.network.value()
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.network, self.len)
    }
}

/// Special-use blocks whose replies are discarded as invalid hops.
pub const SPECIAL_USE_BLOCKS: [Prefix; 9] = [
    Prefix::new(InterfaceAddr::from_octets(0, 0, 0, 0), 8),
    Prefix::new(InterfaceAddr::from_octets(10, 0, 0, 0), 8),
    Prefix::new(InterfaceAddr::from_octets(127, 0, 0, 0), 8),
    Prefix::new(InterfaceAddr::from_octets(172, 16, 0, 0), 12),
    Prefix::new(InterfaceAddr::from_octets(192, 88, 99, 0), 24),
    Prefix::new(InterfaceAddr::from_octets(192, 168, 0, 0), 16),
    Prefix::new(InterfaceAddr::from_octets(198, 18, 0, 0), 15),
    Prefix::new(InterfaceAddr::from_octets(224, 0, 0, 0), 4),
    Prefix::new(InterfaceAddr::from_octets(240, 0, 0, 0), 4),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddressClass {
    Valid,
    SpecialUse(Prefix),
}

impl AddressClass {
    pub fn is_valid(self) -> bool {
        matches!(self, AddressClass::Valid)
    }
}

pub fn classify_address(addr: InterfaceAddr) -> AddressClass {
    SPECIAL_USE_BLOCKS
        .iter()
        .find(|block| block.contains(addr))
        .map_or(AddressClass::Valid, |block| AddressClass::SpecialUse(*block))
}

/// What one TTL of a recorded trace returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HopResponse {
    Responding(InterfaceAddr),
    Silent,
}

impl HopResponse {
    /// The address that counts as a visit, if any.
    pub fn effective(self) -> Option<InterfaceAddr> {
        effective_response(self)
    }
}

/// Maps a raw hop to a visit: silent hops and special-use replies yield nothing.
pub fn effective_response(hop: HopResponse) -> Option<InterfaceAddr> {
    match hop {
        HopResponse::Responding(addr) if classify_address(addr).is_valid() => Some(addr),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path has no hops")]
    Empty,
    #[error("path has {0} hops, more than the maximum TTL")]
    TooLong(usize),
    #[error("responding destination lacks final reply")]
    MissingFinalReply,
    #[error("final hop {found} does not match destination {destination}")]
    FinalHopMismatch {
        destination: InterfaceAddr,
        found: InterfaceAddr,
    },
    #[error("non-responding destination {0} appears at TTL {1}")]
    DestinationInSilentPath(InterfaceAddr, Ttl),
}

/// Ground-truth route from the monitor to one destination.
///
/// `hops[0]` is TTL 1. When the destination responded, its reply is the last
/// hop, so the destination's own hop distance is the path length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedPath {
    destination: InterfaceAddr,
    hops: Vec<HopResponse>,
    dest_responded: bool,
}

impl RecordedPath {
    pub fn new(
        destination: InterfaceAddr,
        hops: Vec<HopResponse>,
        dest_responded: bool,
    ) -> Result<Self, PathError> {
        let Some(last) = hops.last() else {
            return Err(PathError::Empty);
        };
        if hops.len() > MAX_TTL as usize {
            return Err(PathError::TooLong(hops.len()));
        }
        if dest_responded {
            match *last {
                HopResponse::Silent => return Err(PathError::MissingFinalReply),
                HopResponse::Responding(found) if found != destination => {
                    return Err(PathError::FinalHopMismatch { destination, found })
                }
                HopResponse::Responding(_) => {}
            }
        } else if let Some(idx) = hops
            .iter()
            .position(|h| *h == HopResponse::Responding(destination))
        {
            return Err(PathError::DestinationInSilentPath(destination, idx as Ttl + 1));
        }
        Ok(Self {
            destination,
            hops,
            dest_responded,
        })
    }

    pub fn destination(&self) -> InterfaceAddr {
        self.destination
    }

    pub fn hops(&self) -> &[HopResponse] {
        &self.hops
    }

    pub fn dest_responded(&self) -> bool {
        self.dest_responded
    }

    /// Number of recorded hops; also the largest TTL with any information.
    pub fn len(&self) -> Ttl {
        self.hops.len() as Ttl
    }

    /// Paths always hold at least one hop.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// TTL of the destination's own reply.
    pub fn dest_hop(&self) -> Option<Ttl> {
        self.dest_responded.then(|| self.len())
    }

    /// The recorded reply at `ttl`; `None` beyond the record or for TTL 0.
    pub fn hop(&self, ttl: Ttl) -> Option<HopResponse> {
        let idx = usize::try_from(ttl).ok()?.checked_sub(1)?;
        self.hops.get(idx).copied()
    }

    /// Valid visit at `ttl`, if the hop exists and responded validly.
    pub fn effective_at(&self, ttl: Ttl) -> Option<InterfaceAddr> {
        self.hop(ttl).and_then(effective_response)
    }
}

/// Largest TTL with a valid reply, i.e. the most distant responding interface.
pub fn last_responding_hop(path: &RecordedPath) -> Option<Ttl> {
    path.hops
        .iter()
        .rposition(|h| effective_response(*h).is_some())
        .map(|idx| idx as Ttl + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn addr(s: &str) -> InterfaceAddr {
        s.parse().unwrap()
    }

    fn block(s: &str) -> Prefix {
        let (net, len) = s.split_once('/').unwrap();
        Prefix::new(addr(net), len.parse().unwrap())
    }

    /// Independent oracle: compare leading bits one by one.
    fn brute_force_special(a: InterfaceAddr) -> Option<(u32, u8)> {
        const BLOCKS: [(u32, u8); 9] = [
            (0x0000_0000, 8),
            (0x0A00_0000, 8),
            (0x7F00_0000, 8),
            (0xAC10_0000, 12),
            (0xC058_6300, 24),
            (0xC0A8_0000, 16),
            (0xC612_0000, 15),
            (0xE000_0000, 4),
            (0xF000_0000, 4),
        ];
        BLOCKS.iter().copied().find(|&(net, len)| {
            (0..len).all(|bit| {
                let shift = 31 - u32::from(bit);
                (a.value() >> shift) & 1 == (net >> shift) & 1
            })
        })
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify_address(addr("10.1.2.3")),
            AddressClass::SpecialUse(block("10.0.0.0/8"))
        );
        assert_eq!(classify_address(addr("172.32.0.1")), AddressClass::Valid);
        assert_eq!(
            classify_address(addr("172.31.255.255")),
            AddressClass::SpecialUse(block("172.16.0.0/12"))
        );
        assert_eq!(
            classify_address(addr("192.88.99.7")),
            AddressClass::SpecialUse(block("192.88.99.0/24"))
        );
        assert_eq!(
            classify_address(addr("255.255.255.255")),
            AddressClass::SpecialUse(block("240.0.0.0/4"))
        );
        assert_eq!(classify_address(addr("8.8.8.8")), AddressClass::Valid);
        assert_eq!(brute_force_special(addr("172.32.0.1")), None);
    }

    #[test]
    fn classify_matches_oracle_on_random_addresses() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..10_000 {
            let a = InterfaceAddr::new(rng.random());
            let expected = brute_force_special(a);
            match classify_address(a) {
                AddressClass::Valid => assert_eq!(expected, None, "{a}"),
                AddressClass::SpecialUse(p) => {
                    assert_eq!(expected, Some((p.network.value(), p.len)), "{a}")
                }
            }
        }
    }

    #[test]
    fn effective_response_filters() {
        assert_eq!(
            effective_response(HopResponse::Responding(addr("8.8.8.8"))),
            Some(addr("8.8.8.8"))
        );
        assert_eq!(
            effective_response(HopResponse::Responding(addr("192.168.1.1"))),
            None
        );
        assert_eq!(effective_response(HopResponse::Silent), None);
    }

    #[test]
    fn last_responding_hop_examples() {
        let r = |s: &str| HopResponse::Responding(addr(s));
        let p = RecordedPath::new(
            addr("9.9.9.9"),
            vec![
                r("1.0.0.1"),
                r("1.0.0.2"),
                r("1.0.0.3"),
                HopResponse::Silent,
                r("1.0.0.5"),
                HopResponse::Silent,
            ],
            false,
        )
        .unwrap();
        assert_eq!(last_responding_hop(&p), Some(5));

        let private = RecordedPath::new(
            addr("9.9.9.9"),
            vec![r("10.0.0.1"), HopResponse::Silent, r("192.168.0.1")],
            false,
        )
        .unwrap();
        assert_eq!(last_responding_hop(&private), None);

        let full = RecordedPath::new(
            addr("9.9.9.9"),
            vec![r("1.0.0.1"), r("1.0.0.2"), r("1.0.0.3"), r("9.9.9.9")],
            true,
        )
        .unwrap();
        assert_eq!(last_responding_hop(&full), Some(4));
        assert_eq!(full.dest_hop(), Some(4));
    }

    #[test]
    fn path_invariants_rejected() {
        let d = addr("9.9.9.9");
        assert_eq!(RecordedPath::new(d, vec![], false), Err(PathError::Empty));
        assert_eq!(
            RecordedPath::new(d, vec![HopResponse::Silent], true),
            Err(PathError::MissingFinalReply)
        );
        assert!(matches!(
            RecordedPath::new(d, vec![HopResponse::Responding(addr("1.1.1.1"))], true),
            Err(PathError::FinalHopMismatch { .. })
        ));
        assert_eq!(
            RecordedPath::new(d, vec![HopResponse::Responding(d)], false),
            Err(PathError::DestinationInSilentPath(d, 1))
        );
    }

    proptest! {
        #[test]
        fn dotted_quad_round_trip(v in any::<u32>()) {
            let a = InterfaceAddr::new(v);
            prop_assert_eq!(a.to_string().parse::<InterfaceAddr>().unwrap(), a);
        }

        #[test]
        fn effective_implies_valid(v in any::<u32>(), silent in any::<bool>()) {
            let hop = if silent { HopResponse::Silent } else { HopResponse::Responding(InterfaceAddr::new(v)) };
            if let Some(a) = effective_response(hop) {
                prop_assert!(classify_address(a).is_valid());
            }
        }

        #[test]
        fn last_hop_within_path(raw in proptest::collection::vec(proptest::option::of(any::<u32>()), 1..40)) {
            let hops: Vec<_> = raw.iter().map(|h| h.map_or(HopResponse::Silent, |v| HopResponse::Responding(InterfaceAddr::new(v)))).collect();
            // 0.0.0.1 is special-use, so it never collides with a valid hop that could make the path invalid.
            if let Ok(p) = RecordedPath::new(InterfaceAddr::new(1), hops, false) {
                if let Some(t) = last_responding_hop(&p) {
                    prop_assert!(t <= p.len());
                    prop_assert!(p.effective_at(t).is_some());
                }
            }
        }
    }
}
