//! Problem generators: the tabular gridworld and synthetic regression streams.

pub mod gridworld;
pub mod toy;

pub use gridworld::{AlternatingRule, Behavior, EpisodeBatch, ExpertOracle, Mdp, Transition};
pub use toy::{Regime, ToyStream, ToyStreamConfig};

/// Stateless 64-bit mixer (SplitMix64 finalizer).
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed) ^ tag)
}
