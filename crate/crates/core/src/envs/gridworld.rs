//! Deterministic tabular gridworld with linear greedy policies.
//!
//! Cells are indexed row-major from the top-left corner. A policy is a
//! `5 x n_cells` weight matrix stored row-major, so the logit of action `a`
//! in cell `s` is `w[a * n_cells + s]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, mix64};
use crate::error::{Error, Result};
use crate::loss::{LossKind, RoundLoss};
use crate::param::ParamVector;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const STAY: usize = 4;
pub const N_ACTIONS: usize = 5;

/// How the alternating expert picks between its two permitted actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlternatingRule {
    /// Uniform per `(cell, round)` from a seeded hash.
    SeededRandom,
    /// First permitted action on even cells, second on odd cells.
    CellParity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpertOracle {
    /// `{up, right}` on odd rounds, `{down, left}` on even rounds.
    Alternating { seed: u64, rule: AlternatingRule },
    /// Fixed action per cell.
    Stationary { actions: Vec<usize> },
    /// Greedy policy of a weight matrix.
    Policy { weights: ParamVector },
}

impl ExpertOracle {
    pub fn alternating(seed: u64) -> Self {
        ExpertOracle::Alternating { seed, rule: AlternatingRule::SeededRandom }
    }

    /// Moves toward `goal` (vertical first, then horizontal), stays there.
    pub fn goal_seeking(width: usize, height: usize, goal: usize) -> Self {
        let (gr, gc) = (goal / width, goal % width);
        let actions = (0..width * height)
            .map(|s| {
                let (r, c) = (s / width, s % width);
                if r > gr {
                    UP
                } else if r < gr {
                    DOWN
                } else if c > gc {
                    LEFT
                } else if c < gc {
                    RIGHT
                } else {
                    STAY
                }
            })
            .collect();
        ExpertOracle::Stationary { actions }
    }

    /// The expert's action in `cell` at 1-based `round`.
    pub fn action(&self, cell: usize, round: usize) -> usize {
        match self {
            ExpertOracle::Alternating { seed, rule } => {
                let pair = if round % 2 == 1 { [UP, RIGHT] } else { [DOWN, LEFT] };
                let pick = match rule {
                    AlternatingRule::SeededRandom => {
                        (mix64(derive_seed(*seed, round as u64) ^ (cell as u64)) >> 63) as usize
                    }
                    AlternatingRule::CellParity => cell % 2,
                };
                pair[pick]
            }
            ExpertOracle::Stationary { actions } => actions[cell],
            ExpertOracle::Policy { weights } => greedy_action(weights.as_slice(), actions_stride(weights), cell),
        }
    }

    fn check(&self, n_cells: usize) -> Result<()> {
        match self {
            ExpertOracle::Stationary { actions } => {
                if actions.len() != n_cells || actions.iter().any(|&a| a >= N_ACTIONS) {
                    return Err(Error::Config("stationary expert needs one action id < 5 per cell".into()));
                }
            }
            ExpertOracle::Policy { weights } => weights.check_dim(N_ACTIONS * n_cells, "expert policy")?,
            ExpertOracle::Alternating { .. } => {}
        }
        Ok(())
    }
}

fn actions_stride(w: &ParamVector) -> usize {
    w.dim() / N_ACTIONS
}

/// Argmax of the action logits in `cell`; ties go to the lowest id.
pub fn greedy_action(w: &[f64], n_cells: usize, cell: usize) -> usize {
    let mut best = 0;
    for a in 1..N_ACTIONS {
        if w[a * n_cells + cell] > w[best * n_cells + cell] {
            best = a;
        }
    }
    best
}

/// Which policy drives the state transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Agent,
    Expert,
}

impl std::str::FromStr for Behavior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "agent" => Ok(Behavior::Agent),
            "expert" => Ok(Behavior::Expert),
            other => Err(Error::Config(format!("unknown behavior `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub cell: usize,
    pub agent_action: usize,
    pub expert_action: usize,
    /// 1 when the agent picked the expert's action.
    pub reward: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeBatch {
    pub round: usize,
    pub n_cells: usize,
    pub transitions: Vec<Transition>,
    pub behavior: Behavior,
}

impl EpisodeBatch {
    pub fn total_reward(&self) -> u64 {
        self.transitions.iter().map(|t| t.reward as u64).sum()
    }

    /// One-hot state feature of transition `i`.
    pub fn state_feature(&self, i: usize) -> Vec<f64> {
        one_hot(self.n_cells, self.transitions[i].cell)
    }
}

fn one_hot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mdp {
    pub width: usize,
    pub height: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub expert: ExpertOracle,
}

impl Mdp {
    pub fn new(width: usize, height: usize, horizon: usize, gamma: f64, expert: ExpertOracle) -> Result<Self> {
        if width == 0 || height == 0 || horizon == 0 {
            return Err(Error::Config("grid size and horizon must be positive".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Config(format!("discount must lie in [0, 1), got {gamma}")));
        }
        expert.check(width * height)?;
        Ok(Self { width, height, horizon, gamma, expert })
    }

    /// 7 x 7, horizon 5, discount 0.9.
    pub fn standard(expert: ExpertOracle) -> Self {
        Self::new(7, 7, 5, 0.9, expert).expect("standard gridworld is valid")
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    /// Policy dimension `5 * n_cells`.
    pub fn param_dim(&self) -> usize {
        N_ACTIONS * self.n_cells()
    }

    /// Deterministic move; leaving the grid keeps the cell.
    pub fn next_cell(&self, cell: usize, action: usize) -> usize {
        let (r, c) = (cell / self.width, cell % self.width);
        match action {
            UP if r > 0 => cell - self.width,
            DOWN if r + 1 < self.height => cell + self.width,
            LEFT if c > 0 => cell - 1,
            RIGHT if c + 1 < self.width => cell + 1,
            _ => cell,
        }
    }

    fn check_weights(&self, w: &ParamVector) -> Result<()> {
        w.check_dim(self.param_dim(), "gridworld policy")
    }

    fn driver(&self, w: &[f64], behavior: Behavior, round: usize, cell: usize) -> usize {
        match behavior {
            Behavior::Agent => greedy_action(w, self.n_cells(), cell),
            Behavior::Expert => self.expert.action(cell, round),
        }
    }

    /// Samples `episodes` episodes of length `horizon` from a uniform start.
    pub fn rollout(
        &self,
        weights: &ParamVector,
        round: usize,
        episodes: usize,
        seed: u64,
        behavior: Behavior,
    ) -> Result<EpisodeBatch> {
        self.check_weights(weights)?;
        let w = weights.as_slice();
        let n = self.n_cells();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, round as u64));
        let mut transitions = Vec::with_capacity(episodes * self.horizon);
        for _ in 0..episodes {
            let mut cell = rng.random_range(0..n);
            for _ in 0..self.horizon {
                let agent_action = greedy_action(w, n, cell);
                let expert_action = self.expert.action(cell, round);
                transitions.push(Transition {
                    cell,
                    agent_action,
                    expert_action,
                    reward: (agent_action == expert_action) as u8,
                });
                let a = match behavior {
                    Behavior::Agent => agent_action,
                    Behavior::Expert => expert_action,
                };
                cell = self.next_cell(cell, a);
            }
        }
        Ok(EpisodeBatch { round, n_cells: n, transitions, behavior })
    }

    /// Exact state distribution after `tau` steps under the greedy agent.
    pub fn occupancy(&self, weights: &ParamVector, tau: usize) -> Result<Vec<f64>> {
        self.check_weights(weights)?;
        Ok(self.occupancies(weights.as_slice(), Behavior::Agent, 0, tau).pop().expect("tau + 1 entries"))
    }

    /// Distributions for steps `0..=tau` under the given driver.
    fn occupancies(&self, w: &[f64], behavior: Behavior, round: usize, tau: usize) -> Vec<Vec<f64>> {
        let n = self.n_cells();
        let mut p = vec![1.0 / n as f64; n];
        let mut out = Vec::with_capacity(tau + 1);
        out.push(p.clone());
        let moves: Vec<usize> = (0..n).map(|s| self.next_cell(s, self.driver(w, behavior, round, s))).collect();
        for _ in 0..tau {
            let mut q = vec![0.0; n];
            for (s, &mass) in p.iter().enumerate() {
                q[moves[s]] += mass;
            }
            p = q;
            out.push(p.clone());
        }
        out
    }

    /// Per-cell visitation weights `(1/H) sum_{tau<H} p^tau(s)` under the
    /// behavior policy at `round`.
    pub fn visitation(&self, weights: &ParamVector, round: usize, behavior: Behavior) -> Result<Vec<f64>> {
        self.check_weights(weights)?;
        let occ = self.occupancies(weights.as_slice(), behavior, round, self.horizon - 1);
        let h = self.horizon as f64;
        let mut v = vec![0.0; self.n_cells()];
        for p in &occ {
            for (vi, pi) in v.iter_mut().zip(p) {
                *vi += pi / h;
            }
        }
        Ok(v)
    }

    /// Expected loss over the visitation distribution: one sample per
    /// visited cell, weighted by its mass.
    pub fn expected_round_loss(
        &self,
        weights: &ParamVector,
        round: usize,
        behavior: Behavior,
        kind: LossKind,
    ) -> Result<RoundLoss> {
        let v = self.visitation(weights, round, behavior)?;
        let cells: Vec<usize> = (0..self.n_cells()).filter(|&s| v[s] > 0.0).collect();
        let m = cells.len();
        let mut features = Vec::with_capacity(m * self.n_cells());
        let mut targets = Vec::with_capacity(m * N_ACTIONS);
        let mut sw = Vec::with_capacity(m);
        for &s in &cells {
            features.extend(one_hot(self.n_cells(), s));
            targets.extend(one_hot(N_ACTIONS, self.expert.action(s, round)));
            sw.push(v[s] * m as f64);
        }
        RoundLoss::new(features, targets, m, self.n_cells(), N_ACTIONS, kind)?.with_sample_weights(sw)
    }

    /// Expected per-episode reward (agreements) when rolling out `behavior`.
    pub fn expected_reward(&self, weights: &ParamVector, round: usize, behavior: Behavior) -> Result<f64> {
        let v = self.visitation(weights, round, behavior)?;
        let n = self.n_cells();
        let w = weights.as_slice();
        let agree: f64 = (0..n).filter(|&s| greedy_action(w, n, s) == self.expert.action(s, round)).map(|s| v[s]).sum();
        Ok(agree * self.horizon as f64)
    }

    /// `max_tau E_{p^tau}[D(pi_w(s), pi_e(s))]` for `tau < H` under the agent,
    /// with `D` the per-state penalty of `kind` against the expert's one-hot
    /// action.
    pub fn max_expected_divergence(&self, weights: &ParamVector, round: usize, kind: LossKind) -> Result<f64> {
        self.check_weights(weights)?;
        let n = self.n_cells();
        let per_cell: Vec<f64> = (0..n)
            .map(|s| {
                let l = RoundLoss::new(
                    one_hot(n, s),
                    one_hot(N_ACTIONS, self.expert.action(s, round)),
                    1,
                    n,
                    N_ACTIONS,
                    kind,
                )?;
                l.value(weights)
            })
            .collect::<Result<_>>()?;
        let occ = self.occupancies(weights.as_slice(), Behavior::Agent, round, self.horizon - 1);
        Ok(occ.iter().map(|p| p.iter().zip(&per_cell).map(|(a, b)| a * b).sum::<f64>()).fold(0.0, f64::max))
    }
}

/// Empirical round loss: one-hot state features, one-hot expert-action
/// targets (the logistic target and the squared/absolute embedding alike).
pub fn build_round_loss(batch: &EpisodeBatch, kind: LossKind) -> Result<RoundLoss> {
    if batch.transitions.is_empty() {
        return Err(Error::Shape("empty episode batch".into()));
    }
    let n = batch.n_cells;
    let m = batch.transitions.len();
    let mut features = Vec::with_capacity(m * n);
    let mut targets = Vec::with_capacity(m * N_ACTIONS);
    for t in &batch.transitions {
        features.extend(one_hot(n, t.cell));
        targets.extend(one_hot(N_ACTIONS, t.expert_action));
    }
    RoundLoss::new(features, targets, m, n, N_ACTIONS, kind)
}
