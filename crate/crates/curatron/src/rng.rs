//! Seed-stream derivation for reproducible experiments.
//!
//! Every randomized operation takes an explicit RNG. Parallel or repeated
//! runs must use independent streams derived from a master seed plus a list
//! of integer tags (run index, grid coordinates, ...). Derivation mixes the
//! tags through SplitMix64 so that streams for different tags are
//! statistically independent and stable across platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; a well-distributed 64-bit mixer.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a deterministic ChaCha8 stream from `master_seed` and `tags`.
///
/// Different tag lists yield independent streams; the same inputs always
/// yield the same stream.
pub fn derive_rng(master_seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = master_seed;
    let mut seed = [0u8; 32];
    // Fold each tag into the state, then squeeze 32 bytes.
    for &t in tags {
        let mut s = t ^ splitmix64(&mut state);
        let _ = splitmix64(&mut s);
        state ^= s;
    }
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
