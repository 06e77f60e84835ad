//! Seeding contract.
//!
//! A [`NoiseSeed`] names one independent random stream. Every simulator and
//! sampler draws its randomness from `NoiseSeed::rng`, so equal seeds give
//! bit-identical output. Nested work (replicate `j` of proposal `i`) derives
//! its stream with [`NoiseSeed::child`], which keeps results independent of
//! evaluation order and of the execution backend.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseSeed {
    pub seed: u64,
    pub stream_id: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl NoiseSeed {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// ChaCha8 keyed by `seed`, positioned on stream `stream_id`.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Independent sub-stream `index` of this stream.
    pub fn child(&self, index: u64) -> NoiseSeed {
        let key = splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_mul(GOLDEN)));
        NoiseSeed {
            seed: key,
            stream_id: index,
        }
    }
}

impl From<u64> for NoiseSeed {
    fn from(seed: u64) -> Self {
        NoiseSeed::new(seed, 0)
    }
}
