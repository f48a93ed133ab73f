//! Seed derivation shared by every randomised stage.
//!
//! Sub-seeds come from [`derive_seed`], a SplitMix64-based mixer:
//!
//! ```text
//! splitmix64(z):
//!     z = z + 0x9E3779B97F4A7C15            (wrapping)
//!     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!     return z ^ (z >> 31)
//!
//! derive_seed(master, index) = splitmix64(master ^ splitmix64(index))
//! ```
//!
//! Each sub-seed initialises a ChaCha8 stream via `seed_from_u64`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const fn splitmix64(z: u64) -> u64 {
    let z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream labels so independent stages never share a sub-seed.
pub(crate) mod stream {
    pub const SPLIT: u64 = 0x5350_4c49_54;
    pub const RESAMPLE: u64 = 0x5245_5341_4d50;
}
