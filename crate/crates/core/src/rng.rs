//! Seed splitting.
//!
//! Every dataset is driven by a single 64-bit seed. Each pipeline stage draws
//! from its own stream, derived from `(seed, tag)` with a SplitMix64-style
//! mixing function, so stages can be reordered or run in parallel without
//! changing each other's randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the generator.
pub type Rng = ChaCha8Rng;

/// Fixed tags identifying the independent streams of one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Prior = 0x5052_494f_5200_0001,
    Structure = 0x5354_5255_4354_0002,
    Attributes = 0x4154_5452_4942_0003,
    LapPe = 0x4c41_5050_4500_0004,
    Episode = 0x4550_4953_4f44_0005,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `(seed, tag)` into a new seed. Distinct tags give decorrelated seeds.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag.rotate_left(17) ^ 0x6a09_e667_f3bc_c908)
}

/// Opens the stream for one stage of the dataset identified by `seed`.
pub fn stream(seed: u64, tag: StreamTag) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, tag as u64))
}

/// Opens a numbered sub-stream, e.g. the `i`-th retry or the `i`-th episode.
pub fn substream(seed: u64, tag: StreamTag, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(derive_seed(seed, tag as u64), index))
}

/// Draws a fresh seed from a parent stream.
pub fn child(rng: &mut impl rand::Rng) -> Rng {
    Rng::seed_from_u64(rng.random())
}
