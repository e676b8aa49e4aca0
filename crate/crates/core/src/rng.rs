//! Seeded random number generation.
//!
//! Every stochastic step (splitting, duplication, weight init, shuffling)
//! draws from a ChaCha8 stream seeded from a `u64`. Results are reproducible
//! across runs of the same build. Independent streams for one experiment are
//! derived from the experiment seed with a SplitMix64 finalizer so that, for
//! example, the split and the weight init never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream identifiers for [`derive_seed`].
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const BALANCE: u64 = 2;
    pub const INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
}

pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
