//! Deterministic stream derivation: every sampling task gets its own
//! ChaCha8 stream keyed by a root seed plus a tag path (e.g. environment
//! index, path index). Streams are independent of scheduling order, so
//! parallel and serial runs produce identical results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a ChaCha8 generator from a root seed and a tag path. Distinct tag
/// paths give statistically independent streams.
pub fn stream(root: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix64(root ^ 0x6a09_e667_f3bc_c908);
    for (i, &t) in tags.iter().enumerate() {
        state = splitmix64(state ^ splitmix64(t.wrapping_add(i as u64 + 1)));
    }
    let mut key = [0u8; 32];
    let mut z = state;
    for chunk in key.chunks_exact_mut(8) {
        z = splitmix64(z);
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
