//! Seed derivation.
//!
//! Every random draw in the toolkit comes from a [`ChaCha8Rng`] whose seed is
//! derived from a master seed and a path of stream indices. Work items that
//! run in parallel each get their own derived stream, so results never depend
//! on the thread schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

// Stream tags keep unrelated consumers of the same parent seed apart.
pub(crate) const STREAM_SPLIT: u64 = 1;
pub(crate) const STREAM_FIT: u64 = 2;
pub(crate) const STREAM_LANDMARKS: u64 = 3;
pub(crate) const STREAM_VOTER: u64 = 4;
pub(crate) const STREAM_TREE: u64 = 5;
pub(crate) const STREAM_RESTART: u64 = 6;
pub(crate) const STREAM_AUGMENT: u64 = 7;
pub(crate) const STREAM_TRIAL: u64 = 8;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` for the stream `index`.
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Derive along a path of stream indices.
pub fn derive_path(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |s, &i| derive(s, i))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
