//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! keyed by a master seed mixed with stream identifiers, so results do not
//! depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

// Stream tags for pipeline stages.
pub const STREAM_SPLIT: u64 = 0x5350_4c49;
pub const STREAM_RESAMPLE: u64 = 0x5253_4d50;
pub const STREAM_RFE: u64 = 0x5246_4520;
pub const STREAM_CV: u64 = 0x4356_4653;
pub const STREAM_FIT: u64 = 0x4649_5420;
pub const STREAM_CURVE: u64 = 0x4355_5256;
pub const STREAM_VALIDATION: u64 = 0x5641_4c49;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `stream` into `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ stream.rotate_left(17))
}

/// A generator for the stream path `streams` under `seed`.
pub fn rng_for(seed: u64, streams: &[u64]) -> SeededRng {
    let s = streams.iter().fold(seed, |acc, &st| derive_seed(acc, st));
    ChaCha8Rng::seed_from_u64(s)
}
