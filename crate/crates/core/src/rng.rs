//! Counter-based uniform draws.
//!
//! Every draw is a pure function of `(seed, stream, coordinates)`, so
//! initialization does not depend on iteration order or worker count.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw on `[0, 1)` keyed by `seed` and a coordinate tuple.
pub fn uniform(seed: u64, coords: &[u64]) -> f64 {
    let mut h = mix(seed.wrapping_add(GOLDEN));
    for &c in coords {
        h = mix(h ^ c.wrapping_add(GOLDEN).wrapping_mul(GOLDEN));
    }
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
