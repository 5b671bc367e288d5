//! Order-independent random streams.
//!
//! Every logical task gets its own generator keyed by
//! `(master_seed, a, b, c)`, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags for the third key slot.
pub mod purpose {
    pub const SEQUENCE: u64 = 0;
    pub const SHOTS: u64 = 1;
    pub const MODEL: u64 = 2;
}

/// Generator for the stream keyed by `(master_seed, a, b, purpose)`.
pub fn stream(master_seed: u64, a: u64, b: u64, purpose: u64) -> StreamRng {
    let mut seed = [0u8; 32];
    for (chunk, word) in seed.chunks_exact_mut(8).zip([master_seed, a, b, purpose]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Generator for single-seed model constructors (detector bases, random
/// channels, leakage Hamiltonians).
pub fn from_seed(seed: u64) -> StreamRng {
    stream(seed, 0, 0, purpose::MODEL)
}
