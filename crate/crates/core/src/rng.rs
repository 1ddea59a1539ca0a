//! Seeded, splittable random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by a
//! 64-bit seed and a stream label. ChaCha is counter based, so a labelled
//! stream can be opened from any thread and yields the same values no matter
//! how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A seed from which independent labelled streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed(pub u64);

impl StreamSeed {
    pub fn new(seed: u64) -> Self {
        StreamSeed(seed)
    }

    /// Opens stream `label`. Distinct labels give independent streams.
    pub fn stream(&self, label: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(label);
        rng
    }

    /// Derives a child seed, for handing a sub-computation its own namespace.
    pub fn child(&self, label: u64) -> StreamSeed {
        StreamSeed(splitmix64(
            self.0 ^ splitmix64(label.wrapping_add(0x9e37_79b9_7f4a_7c15)),
        ))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
