//! Seeded random streams.
//!
//! Every stochastic component takes an explicit [`StreamRng`]; sub-streams are
//! derived by mixing a base seed with a stream label so that independent units
//! of work (seeds, episodes, evaluation realizations) never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a list of stream labels.
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(mix64(base), |acc, &label| mix64(acc ^ mix64(label)))
}

pub fn derived(base: u64, labels: &[u64]) -> StreamRng {
    seeded(derive_seed(base, labels))
}
