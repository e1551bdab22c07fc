//! Counter-based substream derivation: every (seed, tag, index) triple maps to
//! an independent deterministic stream, so batch results do not depend on
//! scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche for key mixing.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives an independent RNG for a given (seed, tag, index) triple.
pub fn substream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ index);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Stream tags used across the crate.
pub mod tags {
    pub const TRIAL: u64 = 0x7472_6961;
    pub const BOOTSTRAP: u64 = 0x626f_6f74;
    pub const INSTANCE: u64 = 0x696e_7374;
}
