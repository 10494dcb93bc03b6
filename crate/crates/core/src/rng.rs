//! Keyed, counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream whose key
//! is `(seed, purpose)` and whose 64-bit stream id is an index (a replica
//! number, a level, ...). Distinct indices give disjoint keystreams, so results
//! never depend on the order in which streams are opened.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain-separation tag for a family of streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Level = 0x4c45_5645_4c00_0001,
    Walk = 0x5741_4c4b_0000_0002,
    Environment = 0x454e_5600_0000_0003,
    Bootstrap = 0x424f_4f54_0000_0004,
    Limit = 0x4c49_4d49_5400_0005,
    Validate = 0x5641_4c49_4400_0006,
}

/// Opens stream `index` of family `(seed, purpose)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Stream for replica `replica` of an experiment seeded with `seed`.
pub fn replica_stream(seed: u64, replica: u64) -> StreamRng {
    stream(seed, Purpose::Walk, replica)
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Master seed of the fresh environment used by annealed replica `replica`.
pub fn environment_seed(seed: u64, replica: u64) -> u64 {
    mix64(mix64(seed ^ Purpose::Environment as u64).wrapping_add(replica))
}

/// Bijection `Z -> N` used to turn a level into a stream id.
#[inline]
pub fn zigzag(y: i64) -> u64 {
    ((y << 1) ^ (y >> 63)) as u64
}

/// Uniform on `(0, 1]` from the top 53 bits of `u`.
#[inline]
pub fn open_closed_unit(u: u64) -> f64 {
    ((u >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform on `[0, 1)` from the top 53 bits of `u`.
#[inline]
pub fn closed_open_unit(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
