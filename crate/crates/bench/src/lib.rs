//! Fixtures shared by the benchmarks.

use oilbench::envs::{ToyStream, ToyStreamConfig};
use oilbench::{LossKind, Regime, RoundLoss};

/// The first `rounds` losses of the adversarial 10 x 3 toy stream.
pub fn toy_losses(rounds: usize, seed: u64) -> Vec<RoundLoss> {
    let stream =
        ToyStream::new(ToyStreamConfig::new(Regime::Adversarial, LossKind::Squared, seed)).expect("valid stream");
    (1..=rounds).map(|t| stream.round_loss(t).expect("round loss")).collect()
}
