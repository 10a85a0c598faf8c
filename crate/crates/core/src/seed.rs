//! Seed splitting.
//!
//! Every random stream is a ChaCha8 generator seeded from
//! `derive(master, stream, index)`, a SplitMix64 mix of the three inputs.
//! Streams are identified by the constants below, so adding a consumer never
//! shifts another consumer's randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_POOL: u64 = 0x706f_6f6c;
pub const STREAM_PARTICIPANT: u64 = 0x7061_7274;
pub const STREAM_SIMULATION: u64 = 0x7369_6d75;
pub const STREAM_SYNTHETIC: u64 = 0x7379_6e74;
pub const STREAM_SHARED: u64 = 0x7368_6172;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

pub fn rng(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stream, index))
}
