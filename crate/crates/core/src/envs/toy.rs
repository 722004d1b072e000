//! Synthetic online regression and classification streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use crate::error::{Error, Result};
use crate::loss::{LossKind, RoundLoss};
use crate::param::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Targets from `W*` every round.
    Simple,
    /// Targets from `W*` on odd rounds and `-W*` on even rounds.
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyStreamConfig {
    pub d_feature: usize,
    pub d_output: usize,
    pub regime: Regime,
    pub loss_kind: LossKind,
    pub samples_per_round: usize,
    pub rounds: usize,
    pub seed: u64,
    /// Standard deviation of Gaussian noise added to continuous targets.
    #[serde(default)]
    pub noise_std: f64,
    /// Rescales `W*` to this Frobenius norm when set.
    #[serde(default)]
    pub w_star_norm: Option<f64>,
}

impl ToyStreamConfig {
    pub fn new(regime: Regime, loss_kind: LossKind, seed: u64) -> Self {
        Self {
            d_feature: 10,
            d_output: 3,
            regime,
            loss_kind,
            samples_per_round: 1,
            rounds: 250,
            seed,
            noise_std: 0.0,
            w_star_norm: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_feature == 0 || self.d_output == 0 || self.samples_per_round == 0 || self.rounds == 0 {
            return Err(Error::Config("toy stream sizes must be positive".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config("noise_std must be finite and >= 0".into()));
        }
        if let Some(n) = self.w_star_norm {
            if !(n >= 0.0 && n.is_finite()) {
                return Err(Error::Config("w_star_norm must be finite and >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn param_dim(&self) -> usize {
        self.d_feature * self.d_output
    }

    /// `+1`, or `(-1)^(round + 1)` in the adversarial regime.
    pub fn sign(&self, round: usize) -> f64 {
        match self.regime {
            Regime::Simple => 1.0,
            Regime::Adversarial if round % 2 == 1 => 1.0,
            Regime::Adversarial => -1.0,
        }
    }
}

/// A stream with its target-generating matrix drawn once from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyStream {
    cfg: ToyStreamConfig,
    w_star: ParamVector,
}

impl ToyStream {
    pub fn new(cfg: ToyStreamConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, u64::MAX));
        let mut w: Vec<f64> = (0..cfg.param_dim()).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(target) = cfg.w_star_norm {
            let norm = crate::param::norm(&w);
            if norm > 0.0 {
                w.iter_mut().for_each(|v| *v *= target / norm);
            }
        }
        Ok(Self { cfg, w_star: ParamVector::new(w)? })
    }

    pub fn config(&self) -> &ToyStreamConfig {
        &self.cfg
    }

    /// `W*` flattened row-major (`d_output x d_feature`).
    pub fn w_star(&self) -> &ParamVector {
        &self.w_star
    }

    /// Round `round`'s loss with features drawn from `rng`.
    pub fn round_loss_with<R: Rng>(&self, round: usize, rng: &mut R) -> Result<RoundLoss> {
        if round == 0 {
            return Err(Error::Config("rounds are 1-based".into()));
        }
        let c = &self.cfg;
        let (df, dout, m) = (c.d_feature, c.d_output, c.samples_per_round);
        let sign = c.sign(round);
        let w = self.w_star.as_slice();
        let mut features = Vec::with_capacity(m * df);
        let mut targets = Vec::with_capacity(m * dout);
        for _ in 0..m {
            let x: Vec<f64> = (0..df).map(|_| rng.sample(StandardNormal)).collect();
            let z: Vec<f64> = (0..dout)
                .map(|o| sign * w[o * df..(o + 1) * df].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            match c.loss_kind {
                LossKind::Logistic => {
                    let best = z.iter().enumerate().fold(0, |b, (i, &v)| if v > z[b] { i } else { b });
                    targets.extend((0..dout).map(|o| if o == best { 1.0 } else { 0.0 }));
                }
                _ if c.noise_std > 0.0 => {
                    targets.extend(z.iter().map(|v| v + c.noise_std * rng.sample::<f64, _>(StandardNormal)))
                }
                _ => targets.extend(z),
            }
            features.extend(x);
        }
        RoundLoss::new(features, targets, m, df, dout, c.loss_kind)
    }

    /// Round loss from a per-round stream derived from the config seed.
    pub fn round_loss(&self, round: usize) -> Result<RoundLoss> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, round as u64));
        self.round_loss_with(round, &mut rng)
    }
}
