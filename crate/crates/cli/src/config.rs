//! Flat TOML experiment files.
//!
//! Every key maps onto one [`ExperimentConfig`] field (nested enums are
//! spelled as a kind key plus its parameters). An optional `preset` key
//! supplies defaults; without it `env` is required. Unknown keys are errors.
//!
//! ```toml
//! preset = "toy_simple"
//! algo = "ftrl"
//! schedule = "inverse_sqrt_t"
//! alpha = 2.0
//! domain = "ball"
//! radius = 2.0
//! seeds = [1, 2, 3]
//! ```

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use oilbench::envs::gridworld::AlternatingRule;
use oilbench::harness::{self, DomainSpec, EnvSpec, ExpertSpec, LossEstimate, ScheduleSpec};
use oilbench::{Algo, Behavior, Checkpoints, ExperimentConfig, LossKind, Regime, ScheduleKind, SolverMethod, Theorem};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    pub preset: Option<String>,
    pub name: Option<String>,
    pub algo: Option<String>,

    pub env: Option<String>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub horizon: Option<usize>,
    pub gamma: Option<f64>,
    pub expert: Option<String>,
    pub alternating_rule: Option<AlternatingRule>,
    pub goal: Option<usize>,
    pub expert_actions: Option<Vec<usize>>,
    pub loss_estimate: Option<LossEstimate>,
    pub d_feature: Option<usize>,
    pub d_output: Option<usize>,
    pub regime: Option<Regime>,
    pub noise_std: Option<f64>,
    pub w_star_norm: Option<f64>,

    pub schedule: Option<String>,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub smoothness: Option<f64>,
    pub eps_budget: Option<f64>,

    pub solver_method: Option<String>,
    pub max_iters: Option<usize>,
    pub grad_tol: Option<f64>,
    pub armijo_c: Option<f64>,
    pub backtrack_factor: Option<f64>,
    pub init_step: Option<f64>,
    pub solver_seed: Option<u64>,

    pub interactions_per_round: Option<usize>,
    pub total_interactions: Option<usize>,
    pub rounds: Option<usize>,
    pub behavior: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub loss_kind: Option<String>,
    pub huber_delta: Option<f64>,

    pub domain: Option<String>,
    pub radius: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,

    pub checkpoints: Option<String>,
    pub checkpoint_count: Option<usize>,
    pub interpolation: Option<bool>,
    pub bounds: Option<Vec<String>>,
}

pub fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let flat: FlatConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    flat.build()
}

fn parse<T: std::str::FromStr<Err = oilbench::Error>>(s: &str) -> anyhow::Result<T> {
    s.parse::<T>().map_err(|e| anyhow!(e))
}

impl FlatConfig {
    pub fn build(self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match (&self.preset, &self.env) {
            (Some(p), _) => harness::preset(p)?,
            (None, Some(_)) => blank(),
            (None, None) => bail!("config needs `preset` or `env`"),
        };
        if let Some(n) = self.name.clone() {
            cfg.name = n;
        }
        if let Some(a) = &self.algo {
            cfg.algo = parse(a)?;
        }
        self.apply_env(&mut cfg)?;
        self.apply_schedule(&mut cfg)?;
        self.apply_solver(&mut cfg)?;
        if let Some(m) = self.interactions_per_round {
            // keep the round count unless totals are given explicitly
            let rounds = cfg.rounds();
            cfg.interactions_per_round = m;
            cfg.total_interactions = rounds * m;
        }
        if let Some(t) = self.total_interactions {
            cfg.total_interactions = t;
        }
        if let Some(r) = self.rounds {
            if self.total_interactions.is_some() {
                bail!("give either `rounds` or `total_interactions`, not both");
            }
            cfg = cfg.with_rounds(r);
        }
        if let Some(b) = &self.behavior {
            cfg.behavior = parse::<Behavior>(b)?;
        }
        if let Some(s) = self.seeds.clone() {
            cfg.seeds = s;
        }
        if let Some(k) = &self.loss_kind {
            cfg.loss_kind = parse(k)?;
        }
        if let Some(d) = self.huber_delta {
            match cfg.loss_kind {
                LossKind::Huber { .. } => cfg.loss_kind = LossKind::Huber { delta: d },
                _ => bail!("`huber_delta` needs loss_kind = \"huber\""),
            }
        }
        self.apply_domain(&mut cfg)?;
        self.apply_checkpoints(&mut cfg)?;
        if let Some(i) = self.interpolation {
            cfg.interpolation = i;
        }
        if let Some(b) = &self.bounds {
            cfg.bounds = b.iter().map(|s| parse::<Theorem>(s)).collect::<anyhow::Result<_>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_env(&self, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
        let kind = match (&self.env, &cfg.env) {
            (Some(k), _) => k.as_str(),
            (None, EnvSpec::Gridworld { .. }) => "gridworld",
            (None, EnvSpec::Toy { .. }) => "toy",
        };
        match kind {
            "gridworld" => {
                let (mut width, mut height, mut horizon, mut gamma, mut expert, mut estimate) = match &cfg.env {
                    EnvSpec::Gridworld { width, height, horizon, gamma, expert, loss_estimate } => {
                        (*width, *height, *horizon, *gamma, expert.clone(), *loss_estimate)
                    }
                    _ => (
                        7,
                        7,
                        5,
                        0.9,
                        ExpertSpec::Alternating { rule: AlternatingRule::SeededRandom },
                        LossEstimate::Sampled,
                    ),
                };
                width = self.width.unwrap_or(width);
                height = self.height.unwrap_or(height);
                horizon = self.horizon.unwrap_or(horizon);
                gamma = self.gamma.unwrap_or(gamma);
                estimate = self.loss_estimate.unwrap_or(estimate);
                expert = match self.expert.as_deref() {
                    None => expert,
                    Some("alternating") => {
                        ExpertSpec::Alternating { rule: self.alternating_rule.unwrap_or(AlternatingRule::SeededRandom) }
                    }
                    Some("goal_seeking") => ExpertSpec::GoalSeeking { goal: self.goal.unwrap_or(width * height / 2) },
                    Some("stationary") => ExpertSpec::Stationary {
                        actions: self
                            .expert_actions
                            .clone()
                            .ok_or_else(|| anyhow!("stationary expert needs `expert_actions`"))?,
                    },
                    Some(other) => bail!("unknown expert `{other}`"),
                };
                if let (Some(rule), ExpertSpec::Alternating { .. }) = (self.alternating_rule, &expert) {
                    expert = ExpertSpec::Alternating { rule };
                }
                if let (Some(goal), ExpertSpec::GoalSeeking { .. }) = (self.goal, &expert) {
                    expert = ExpertSpec::GoalSeeking { goal };
                }
                cfg.env = EnvSpec::Gridworld { width, height, horizon, gamma, expert, loss_estimate: estimate };
            }
            "toy" => {
                let (mut df, mut dout, mut regime, mut noise, mut norm) = match &cfg.env {
                    EnvSpec::Toy { d_feature, d_output, regime, noise_std, w_star_norm } => {
                        (*d_feature, *d_output, *regime, *noise_std, *w_star_norm)
                    }
                    _ => (10, 3, Regime::Simple, 0.0, None),
                };
                df = self.d_feature.unwrap_or(df);
                dout = self.d_output.unwrap_or(dout);
                regime = self.regime.unwrap_or(regime);
                noise = self.noise_std.unwrap_or(noise);
                norm = self.w_star_norm.or(norm);
                cfg.env = EnvSpec::Toy { d_feature: df, d_output: dout, regime, noise_std: noise, w_star_norm: norm };
            }
            other => bail!("unknown env `{other}` (expected gridworld or toy)"),
        }
        Ok(())
    }

    fn apply_schedule(&self, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
        let need = |v: Option<f64>, key: &str, kind: &str| v.ok_or_else(|| anyhow!("schedule `{kind}` needs `{key}`"));
        cfg.schedule = match self.schedule.as_deref() {
            None => match (self.eta, self.alpha) {
                (Some(_), Some(_)) => bail!("give either `eta` or `alpha`, not both"),
                (Some(eta), None) => ScheduleSpec::Fixed { schedule: ScheduleKind::Constant { eta } },
                (None, Some(alpha)) => ScheduleSpec::Fixed { schedule: cfg.algo.default_schedule(alpha) },
                (None, None) => cfg.schedule,
            },
            Some("auto") => ScheduleSpec::Auto,
            Some("theorem2_from_stream") => ScheduleSpec::Theorem2FromStream,
            Some(k @ "constant") => {
                ScheduleSpec::Fixed { schedule: ScheduleKind::Constant { eta: need(self.eta, "eta", k)? } }
            }
            Some(k @ "inverse_sqrt_t") => {
                ScheduleSpec::Fixed { schedule: ScheduleKind::InverseSqrtT { alpha: need(self.alpha, "alpha", k)? } }
            }
            Some(k @ "adaptive_grad_norm") => ScheduleSpec::Fixed {
                schedule: ScheduleKind::AdaptiveGradNorm { alpha: need(self.alpha, "alpha", k)? },
            },
            Some(k @ "theorem2") => ScheduleSpec::Fixed {
                schedule: ScheduleKind::Theorem2 {
                    smoothness: need(self.smoothness, "smoothness", k)?,
                    eps_budget: need(self.eps_budget, "eps_budget", k)?,
                },
            },
            Some(other) => bail!("unknown schedule `{other}`"),
        };
        if let ScheduleSpec::Fixed { schedule } = cfg.schedule {
            schedule.validate()?;
        }
        Ok(())
    }

    fn apply_solver(&self, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
        let s = &mut cfg.inner_solver;
        if let Some(m) = &self.solver_method {
            s.method = parse::<SolverMethod>(m)?;
        }
        s.max_iters = self.max_iters.unwrap_or(s.max_iters);
        s.grad_tol = self.grad_tol.unwrap_or(s.grad_tol);
        s.armijo_c = self.armijo_c.unwrap_or(s.armijo_c);
        s.backtrack_factor = self.backtrack_factor.unwrap_or(s.backtrack_factor);
        s.init_step = self.init_step.unwrap_or(s.init_step);
        s.rng_seed = self.solver_seed.unwrap_or(s.rng_seed);
        Ok(())
    }

    fn apply_domain(&self, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
        cfg.domain = match self.domain.as_deref() {
            None => cfg.domain,
            Some("unconstrained") => DomainSpec::Unconstrained,
            Some("ball") => {
                DomainSpec::Ball { radius: self.radius.ok_or_else(|| anyhow!("ball domain needs `radius`"))? }
            }
            Some("box") => DomainSpec::Box {
                lo: self.lo.ok_or_else(|| anyhow!("box domain needs `lo`"))?,
                hi: self.hi.ok_or_else(|| anyhow!("box domain needs `hi`"))?,
            },
            Some(other) => bail!("unknown domain `{other}`"),
        };
        Ok(())
    }

    fn apply_checkpoints(&self, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
        cfg.checkpoints = match self.checkpoints.as_deref() {
            None => cfg.checkpoints,
            Some("auto") => Checkpoints::Auto,
            Some("every_round") => Checkpoints::EveryRound,
            Some("final") => Checkpoints::Final,
            Some("off") => Checkpoints::Off,
            Some("log_spaced") => Checkpoints::LogSpaced {
                count: self
                    .checkpoint_count
                    .ok_or_else(|| anyhow!("log_spaced checkpoints need `checkpoint_count`"))?,
            },
            Some(other) => bail!("unknown checkpoints `{other}`"),
        };
        Ok(())
    }
}

fn blank() -> ExperimentConfig {
    ExperimentConfig {
        name: "custom".into(),
        env: EnvSpec::Toy { d_feature: 10, d_output: 3, regime: Regime::Simple, noise_std: 0.0, w_star_norm: None },
        algo: Algo::Ftl,
        schedule: ScheduleSpec::Auto,
        inner_solver: Default::default(),
        interactions_per_round: 1,
        total_interactions: 250,
        behavior: Behavior::Agent,
        seeds: vec![1],
        loss_kind: LossKind::Squared,
        domain: DomainSpec::Unconstrained,
        checkpoints: Checkpoints::Auto,
        interpolation: false,
        bounds: Vec::new(),
    }
}
