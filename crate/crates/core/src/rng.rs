//! Deterministic randomness helpers shared across the crate.
//!
//! Every random draw flows from a caller-supplied `u64` seed through a
//! [`ChaCha8Rng`]; nothing reads entropy from the environment. Sub-seeds for
//! independent streams are derived with [`mix_seed`] so that results do not
//! depend on evaluation order or worker-thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Builds the stream-cipher RNG used for all sampling in this crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One splitmix64 step over `seed` xor a stream tag.
///
/// Used to derive independent sub-seeds (per object, per trial, per row)
/// from a single root seed.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over UTF-8 bytes; stable across runs and platforms.
pub fn stable_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Standard normal draw via Box-Muller.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
