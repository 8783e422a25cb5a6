//! Deterministic seed derivation.
//!
//! Every random draw in the toolkit comes from a ChaCha stream seeded by
//! mixing a master seed with a domain tag and index path. Results are
//! therefore independent of execution order and thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep unrelated RNG streams from colliding even when their
/// index paths coincide.
pub mod tag {
    pub const BAG: u64 = 0x01;
    pub const KMEANS: u64 = 0x02;
    pub const NOISE: u64 = 0x03;
    pub const TRIAL: u64 = 0x04;
    pub const SYNTH: u64 = 0x05;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mix a master seed with a path of indices into a single 64-bit seed.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &part in path {
        state = splitmix64(state ^ splitmix64(part));
    }
    state
}

/// RNG for a derived seed.
pub fn rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, path))
}
