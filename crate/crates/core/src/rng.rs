//! Keyed random streams.
//!
//! Every random decision in the pipeline is drawn from a stream keyed by the
//! run seed plus the coordinates of the decision (frame, object, purpose), so
//! results never depend on processing order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a sequence of coordinates into a new 64-bit key.
pub fn derive_key(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(seed, parts))
}

/// Purpose tags keep streams for different decisions independent.
pub mod tag {
    pub const MISS: u64 = 0x4d15;
    pub const SHIFT: u64 = 0x5a1f;
    pub const COINCIDENT: u64 = 0xc01d;
    pub const INIT: u64 = 0x1a17;
    pub const SPLIT: u64 = 0x5b17;
    pub const WINDOW: u64 = 0x3d0b;
    pub const PARAMS: u64 = 0x9a4a;
    pub const CONDITION: u64 = 0xc0d1;
    pub const SEQUENCE: u64 = 0x5e90;
}
