//! Deterministic seed splitting.
//!
//! Every random stream in a run is derived from one master seed. A derived
//! seed is obtained by folding a list of words into the master seed with the
//! SplitMix64 finalizer:
//!
//! ```text
//! h = splitmix64(master)
//! for (i, w) in words: h = splitmix64(h ^ splitmix64(w + (i + 1) * GOLDEN))
//! ```
//!
//! The first word is a stream tag (see the `TAG_*` constants); the remaining
//! words are indices (disorder sample, α index, replica group, ladder slot).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Scattering matrix of a disorder sample.
pub const TAG_MATRIX: u64 = 1;
/// Choice of planted output channels of a disorder sample.
pub const TAG_LAMBDA: u64 = 2;
/// Dynamics seed for one `(sample, α)` exchange Monte Carlo run.
pub const TAG_DYNAMICS: u64 = 3;
/// Per-chain Metropolis stream inside a run.
pub const TAG_CHAIN: u64 = 4;
/// Per-group exchange stream inside a run.
pub const TAG_EXCHANGE: u64 = 5;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, words: &[u64]) -> u64 {
    words.iter().enumerate().fold(splitmix64(master), |h, (i, &w)| {
        let salt = GOLDEN.wrapping_mul(i as u64 + 1);
        splitmix64(h ^ splitmix64(w.wrapping_add(salt)))
    })
}

/// The generator used for every stream in the crate.
pub type StreamRng = ChaCha8Rng;

pub fn stream(master: u64, words: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, words))
}
