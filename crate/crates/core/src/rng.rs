//! Counter-based seeding.
//!
//! Every random stream in the crate is addressed by a `(master_seed, index)`
//! pair mapped through a fixed 64-bit mixer, so a realization's randomness
//! does not depend on which worker ran it or in which order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream tags keep the Brownian, fractional and inner-ensemble streams of one
/// realization disjoint.
pub mod tag {
    pub const BM: u64 = 0x4252_4f57;
    pub const FBM: u64 = 0x4642_4d00;
    pub const DRIVER: u64 = 0x4452_4956;
    pub const INNER: u64 = 0x494e_4e52;
}

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master`.
#[inline]
pub fn stream_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// Seed of realization `index` within the stream family `tag` under `master`.
#[inline]
pub fn substream(master: u64, tag: u64, index: u64) -> u64 {
    stream_seed(stream_seed(master, tag), index)
}

pub fn stream_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `±1` with probability one half each.
#[inline]
pub fn sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}
