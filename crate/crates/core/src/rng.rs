//! Reproducible random streams.
//!
//! Every random draw in a run comes from a ChaCha8 stream keyed by the master
//! seed and selected by a `(purpose, index, sub-index)` triple. ChaCha is a
//! counter-based generator, so each stream is independent of how many other
//! streams exist and of the order or thread in which they are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; keeps e.g. the realization and fading streams of
/// the same trial index apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Realization = 1,
    Fading = 2,
    Bootstrap = 3,
    Auxiliary = 4,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream for `(purpose, index, sub)` under `master_seed`.
pub fn stream(master_seed: u64, purpose: Purpose, index: u64, sub: u64) -> ChaCha8Rng {
    let mut state = master_seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut selector = purpose as u64;
    let mut id = splitmix64(&mut selector);
    selector ^= index;
    id ^= splitmix64(&mut selector);
    selector ^= sub.rotate_left(32);
    id ^= splitmix64(&mut selector).rotate_left(17);

    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(id);
    rng
}
