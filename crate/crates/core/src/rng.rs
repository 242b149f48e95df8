//! Counter-based seeding.
//!
//! A [`RngSeed`] is a 64-bit key plus a stream index. Every Monte Carlo
//! sample draws from its own ChaCha stream, so a batch produces the same
//! numbers regardless of how it is split across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub const fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub const fn with_stream(self, stream: u64) -> Self {
        Self {
            seed: self.seed,
            stream,
        }
    }

    /// Generator positioned at the start of this (seed, stream) pair.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Key for the `index`-th sample of a batch owned by this seed.
    ///
    /// The batch key folds in the current stream so that two batches
    /// started from different streams never share sample streams.
    pub fn sample(&self, index: u64) -> RngSeed {
        RngSeed {
            seed: splitmix64(self.seed ^ splitmix64(self.stream)),
            stream: index,
        }
    }

    /// Independent seed for a tagged sub-experiment.
    pub fn derive(&self, tag: u64) -> RngSeed {
        RngSeed {
            seed: splitmix64(self.seed.wrapping_add(splitmix64(tag ^ 0x5851_f42d_4c95_7f2d))),
            stream: self.stream,
        }
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed::new(seed)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
