//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a [`RngStream`]: a `(seed, stream)`
//! pair that maps onto a ChaCha8 generator with a native stream id. Streams for
//! individual samples, policies and bounds are derived by hashing a parent
//! stream with a role tag and an index, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator type handed out by [`RngStream::rng`].
pub type StreamRng = ChaCha8Rng;

/// Role tags used when deriving child streams.
pub mod role {
    pub const NATURE: u64 = 0x6e61_7475_7265;
    pub const POLICY: u64 = 0x706f_6c69_6379;
    pub const BOUND: u64 = 0x626f_756e_64;
    pub const DECIDE: u64 = 0x6465_6369_6465;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Child stream keyed by a role tag and an index.
    pub fn derive(&self, tag: u64, index: u64) -> RngStream {
        let mut h = splitmix64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        h = splitmix64(h ^ self.stream);
        h = splitmix64(h ^ tag);
        h = splitmix64(h ^ index);
        RngStream::new(h, splitmix64(h ^ tag.rotate_left(17) ^ index))
    }

    /// Child stream keyed by several components (e.g. policy id and horizon).
    pub fn derive_path(&self, tag: u64, path: &[u64]) -> RngStream {
        path.iter()
            .fold(self.derive(tag, path.len() as u64), |s, &p| s.derive(tag, p))
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
