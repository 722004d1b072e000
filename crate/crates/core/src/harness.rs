//! Experiment orchestration: the interaction loop, seed batches, step-size
//! grid search and named presets.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::Domain;
use crate::envs::gridworld::{self, AlternatingRule, Behavior, ExpertOracle, Mdp};
use crate::envs::toy::{Regime, ToyStream, ToyStreamConfig};
use crate::error::{Error, Result};
use crate::loss::{LossKind, RoundLoss};
use crate::metrics::{self, BoundInputs, BoundReport, Checkpoints, RegretLedger, Theorem};
use crate::optimizers::{Algo, OptimizerState};
use crate::param::ParamVector;
use crate::schedule::ScheduleKind;
use crate::solvers::SolverConfig;

/// The step-size grid `10^-5 .. 10^5`.
pub fn decade_grid() -> Vec<f64> {
    (-5..=5).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpertSpec {
    /// Alternating expert seeded by the run seed.
    Alternating {
        rule: AlternatingRule,
    },
    /// Stationary expert walking to `goal`.
    GoalSeeking {
        goal: usize,
    },
    Stationary {
        actions: Vec<usize>,
    },
}

/// How a gridworld round's loss is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossEstimate {
    /// Empirical average over the sampled transitions.
    Sampled,
    /// Exact expectation over the step-averaged state distribution.
    Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSpec {
    Gridworld {
        width: usize,
        height: usize,
        horizon: usize,
        gamma: f64,
        expert: ExpertSpec,
        loss_estimate: LossEstimate,
    },
    Toy {
        d_feature: usize,
        d_output: usize,
        regime: Regime,
        #[serde(default)]
        noise_std: f64,
        #[serde(default)]
        w_star_norm: Option<f64>,
    },
}

impl EnvSpec {
    pub fn param_dim(&self) -> usize {
        match self {
            EnvSpec::Gridworld { width, height, .. } => gridworld::N_ACTIONS * width * height,
            EnvSpec::Toy { d_feature, d_output, .. } => d_feature * d_output,
        }
    }

    pub fn is_tabular(&self) -> bool {
        matches!(self, EnvSpec::Gridworld { .. })
    }
}

/// Feasible set, centered at the origin in whatever dimension the env needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Unconstrained,
    Ball { radius: f64 },
    Box { lo: f64, hi: f64 },
}

impl DomainSpec {
    pub fn build(&self, dim: usize) -> Result<Domain> {
        match *self {
            DomainSpec::Unconstrained => Ok(Domain::Unconstrained),
            DomainSpec::Ball { radius } => Domain::centered_ball(dim, radius),
            DomainSpec::Box { lo, hi } => {
                Domain::new_box(ParamVector::new(vec![lo; dim])?, ParamVector::new(vec![hi; dim])?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    /// The algorithm's default schedule with scale `D` (bounded domain) or 1.
    Auto,
    Fixed {
        schedule: ScheduleKind,
    },
    /// `theorem2` with `L` and `sum eps^2` measured on the (oblivious)
    /// stream before the run.
    Theorem2FromStream,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: EnvSpec,
    pub algo: Algo,
    pub schedule: ScheduleSpec,
    pub inner_solver: SolverConfig,
    pub interactions_per_round: usize,
    pub total_interactions: usize,
    pub behavior: Behavior,
    pub seeds: Vec<u64>,
    pub loss_kind: LossKind,
    pub domain: DomainSpec,
    pub checkpoints: Checkpoints,
    /// Compute `eps_t^2` against the final hindsight point.
    pub interpolation: bool,
    pub bounds: Vec<Theorem>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let m = self.interactions_per_round;
        if m == 0 || self.total_interactions == 0 {
            return Err(Error::Config("interaction counts must be positive".into()));
        }
        if !self.total_interactions.is_multiple_of(m) {
            return Err(Error::Config(format!(
                "total_interactions {} is not divisible by interactions_per_round {m}",
                self.total_interactions
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if let EnvSpec::Gridworld { horizon, .. } = self.env {
            if horizon == 0 || !m.is_multiple_of(horizon) {
                return Err(Error::Config(format!(
                    "gridworld interactions_per_round {m} must be a multiple of the horizon {horizon}"
                )));
            }
        }
        if matches!(self.schedule, ScheduleSpec::Theorem2FromStream) && self.env.is_tabular() {
            return Err(Error::Config("theorem2_from_stream needs an oblivious (toy) stream".into()));
        }
        self.inner_solver.validate()?;
        self.domain.build(self.env.param_dim())?;
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        self.total_interactions / self.interactions_per_round
    }

    /// Overrides the number of rounds at the current batch size.
    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.total_interactions = rounds * self.interactions_per_round;
        self
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    fn default_scale(&self, dom: &Domain) -> f64 {
        if dom.is_bounded() {
            dom.diameter()
        } else {
            1.0
        }
    }

    /// The schedule a run with `seed` will use.
    pub fn resolve_schedule(&self, seed: u64) -> Result<ScheduleKind> {
        let dom = self.domain.build(self.env.param_dim())?;
        match self.schedule {
            ScheduleSpec::Auto => Ok(self.algo.default_schedule(self.default_scale(&dom))),
            ScheduleSpec::Fixed { schedule } => Ok(schedule),
            ScheduleSpec::Theorem2FromStream => {
                let losses = oblivious_stream(self, seed)?;
                let h = metrics::hindsight(&losses, &dom, &self.inner_solver, None)?;
                let eps: f64 =
                    losses.iter().map(|l| metrics::interpolation_error(l, &h.point, &dom)).sum::<Result<f64>>()?;
                let inp = BoundInputs::measure(&losses, &dom);
                let l = inp
                    .smoothness
                    .filter(|l| *l > 0.0)
                    .ok_or_else(|| Error::Config("theorem2 schedule needs smooth losses".into()))?;
                Ok(ScheduleKind::Theorem2 { smoothness: l, eps_budget: eps })
            }
        }
    }

    fn toy_stream(&self, seed: u64) -> Result<ToyStream> {
        let EnvSpec::Toy { d_feature, d_output, regime, noise_std, w_star_norm } = self.env else {
            return Err(Error::Config("not a toy environment".into()));
        };
        ToyStream::new(ToyStreamConfig {
            d_feature,
            d_output,
            regime,
            loss_kind: self.loss_kind,
            samples_per_round: self.interactions_per_round,
            rounds: self.rounds(),
            seed,
            noise_std,
            w_star_norm,
        })
    }

    fn mdp(&self, seed: u64) -> Result<Mdp> {
        let EnvSpec::Gridworld { width, height, horizon, gamma, ref expert, .. } = self.env else {
            return Err(Error::Config("not a gridworld environment".into()));
        };
        let expert = match expert {
            ExpertSpec::Alternating { rule } => ExpertOracle::Alternating { seed, rule: *rule },
            ExpertSpec::GoalSeeking { goal } => {
                if *goal >= width * height {
                    return Err(Error::Config(format!("goal cell {goal} is off the grid")));
                }
                ExpertOracle::goal_seeking(width, height, *goal)
            }
            ExpertSpec::Stationary { actions } => ExpertOracle::Stationary { actions: actions.clone() },
        };
        Mdp::new(width, height, horizon, gamma, expert)
    }
}

/// Every round's loss of a toy stream (they do not depend on the iterates).
pub fn oblivious_stream(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<RoundLoss>> {
    let stream = cfg.toy_stream(seed)?;
    (1..=cfg.rounds()).map(|t| stream.round_loss(t)).collect()
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 4] = ["gridworld_adversarial", "gridworld_stationary", "toy_simple", "toy_adversarial"];

/// Named experiment configurations.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let grid = |expert, loss_estimate| EnvSpec::Gridworld {
        width: 7,
        height: 7,
        horizon: 5,
        gamma: 0.9,
        expert,
        loss_estimate,
    };
    let toy = |regime| EnvSpec::Toy { d_feature: 10, d_output: 3, regime, noise_std: 0.0, w_star_norm: None };
    let base = |env, m: usize, rounds: usize, loss_kind| ExperimentConfig {
        name: name.to_string(),
        env,
        algo: Algo::Ftl,
        schedule: ScheduleSpec::Auto,
        inner_solver: SolverConfig::default(),
        interactions_per_round: m,
        total_interactions: m * rounds,
        behavior: Behavior::Agent,
        seeds: vec![1, 2, 3],
        loss_kind,
        domain: DomainSpec::Unconstrained,
        checkpoints: Checkpoints::Auto,
        interpolation: false,
        bounds: Vec::new(),
    };
    match name {
        "gridworld_adversarial" => Ok(base(
            grid(ExpertSpec::Alternating { rule: AlternatingRule::SeededRandom }, LossEstimate::Sampled),
            5,
            100,
            LossKind::Logistic,
        )),
        "gridworld_stationary" => Ok(ExperimentConfig {
            bounds: vec![Theorem::ConstantRegret],
            ..base(grid(ExpertSpec::GoalSeeking { goal: 24 }, LossEstimate::Expected), 5, 100, LossKind::Squared)
        }),
        "toy_simple" => {
            Ok(ExperimentConfig { interpolation: true, ..base(toy(Regime::Simple), 1, 250, LossKind::Squared) })
        }
        "toy_adversarial" => {
            Ok(ExperimentConfig { interpolation: true, ..base(toy(Regime::Adversarial), 1, 250, LossKind::Squared) })
        }
        other => Err(Error::Config(format!("unknown preset `{other}` (expected one of {})", PRESETS.join(", ")))),
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub round: usize,
    pub env_steps: usize,
    pub loss: f64,
    pub avg_cumulative_loss: f64,
    pub cumulative_regret: Option<f64>,
    pub cumulative_reward: f64,
    pub eta_t: f64,
    pub sigma_t: f64,
    pub inner_iters: usize,
    pub solver_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRefusal {
    pub theorem: Theorem,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub algo: Algo,
    pub schedule: Option<ScheduleKind>,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub rows: Vec<RunRow>,
    pub ledger: RegretLedger,
    pub bound_reports: Vec<BoundReport>,
    pub bound_refusals: Vec<BoundRefusal>,
    /// `max_{tau, t}` expected divergence (tabular runs with the constant-regret check).
    pub c_max: Option<f64>,
    pub final_iterate: Option<ParamVector>,
    /// Seconds per round; not serialized so records stay reproducible.
    #[serde(skip)]
    pub wall_clock_secs: Vec<f64>,
}

impl RunRecord {
    pub fn final_avg_cumulative_loss(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.avg_cumulative_loss)
    }

    pub fn final_regret(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.cumulative_regret)
    }

    /// Regret at 1-based round `t`, if computed.
    pub fn regret_at(&self, t: usize) -> Option<f64> {
        self.rows.get(t.checked_sub(1)?).and_then(|r| r.cumulative_regret)
    }
}

enum Env {
    Grid { mdp: Mdp, episodes: usize, estimate: LossEstimate },
    Toy(ToyStream),
}

struct Trace {
    losses: Vec<RoundLoss>,
    rows: Vec<RunRow>,
    rewards: Vec<f64>,
    flags: Vec<bool>,
    grad_sq: Vec<f64>,
    sigma: Vec<f64>,
    eta: Vec<f64>,
    clock: Vec<f64>,
    c_max: Option<f64>,
    final_w: Option<ParamVector>,
}

/// Executes the interaction loop for one seed. Configuration errors are
/// returned; failures during the run yield a record marked incomplete.
pub fn run(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let dim = cfg.env.param_dim();
    let dom = cfg.domain.build(dim)?;
    let schedule = cfg.resolve_schedule(seed)?;
    let env = match &cfg.env {
        EnvSpec::Gridworld { horizon, loss_estimate, .. } => {
            Env::Grid { mdp: cfg.mdp(seed)?, episodes: cfg.interactions_per_round / horizon, estimate: *loss_estimate }
        }
        EnvSpec::Toy { .. } => Env::Toy(cfg.toy_stream(seed)?),
    };
    let mut trace = Trace {
        losses: Vec::new(),
        rows: Vec::new(),
        rewards: Vec::new(),
        flags: Vec::new(),
        grad_sq: Vec::new(),
        sigma: Vec::new(),
        eta: Vec::new(),
        clock: Vec::new(),
        c_max: None,
        final_w: None,
    };
    let loop_result = interact(cfg, seed, &dom, schedule, &env, &mut trace);
    let mut record = RunRecord {
        config_hash: cfg.hash(),
        seed,
        algo: cfg.algo,
        schedule: Some(schedule),
        complete: true,
        error: None,
        rows: Vec::new(),
        ledger: RegretLedger::from_losses(Vec::new(), Vec::new(), Vec::new()),
        bound_reports: Vec::new(),
        bound_refusals: Vec::new(),
        c_max: trace.c_max,
        final_iterate: trace.final_w.clone(),
        wall_clock_secs: std::mem::take(&mut trace.clock),
    };
    let per_round: Vec<f64> = trace.rows.iter().map(|r| r.loss).collect();
    let mut ledger = RegretLedger::from_losses(per_round, trace.rewards.clone(), trace.flags.clone());
    let post = loop_result
        .and_then(|_| ledger.attach_regret(&trace.losses, &dom, &cfg.inner_solver, cfg.checkpoints, cfg.interpolation));
    for (row, r) in trace.rows.iter_mut().zip(&ledger.cumulative_regret) {
        row.cumulative_regret = *r;
    }
    if let Err(e) = post {
        record.complete = false;
        record.error = Some(e.to_string());
    } else if !cfg.bounds.is_empty() {
        let mut inp = BoundInputs::measure(&trace.losses, &dom);
        inp.algo = Some(cfg.algo);
        inp.schedule = Some(schedule);
        inp.grad_sq = trace.grad_sq.clone();
        inp.sigma = trace.sigma.clone();
        inp.eta = trace.eta.clone();
        if let Env::Grid { mdp, .. } = &env {
            inp.gamma = Some(mdp.gamma);
            inp.c_max = trace.c_max;
            inp.horizon = Some(mdp.horizon);
        }
        for &th in &cfg.bounds {
            match metrics::check_bound(th, &ledger, &inp) {
                Ok(r) => record.bound_reports.push(r),
                Err(Error::HypothesisMismatch { reason, .. }) => {
                    record.bound_refusals.push(BoundRefusal { theorem: th, reason })
                }
                Err(e) => {
                    record.complete = false;
                    record.error = Some(e.to_string());
                }
            }
        }
    }
    record.rows = trace.rows;
    record.ledger = ledger;
    Ok(record)
}

fn interact(
    cfg: &ExperimentConfig,
    seed: u64,
    dom: &Domain,
    schedule: ScheduleKind,
    env: &Env,
    trace: &mut Trace,
) -> Result<()> {
    let dim = cfg.env.param_dim();
    let w1 = dom.project(&ParamVector::zeros(dim));
    let mut state = OptimizerState::new(cfg.algo, w1, schedule)?;
    let track_c = cfg.bounds.contains(&Theorem::ConstantRegret);
    let m = cfg.interactions_per_round;
    let solver =
        SolverConfig { rng_seed: crate::envs::derive_seed(seed, cfg.inner_solver.rng_seed), ..cfg.inner_solver };
    let (mut cum_loss, mut cum_reward) = (0.0, 0.0);
    for t in 1..=cfg.rounds() {
        let start = Instant::now();
        let w = state.w().clone();
        let (loss, reward) = match env {
            Env::Grid { mdp, episodes, estimate } => {
                if track_c {
                    let c = mdp.max_expected_divergence(&w, t, cfg.loss_kind)?;
                    trace.c_max = Some(trace.c_max.map_or(c, |p: f64| p.max(c)));
                }
                match estimate {
                    LossEstimate::Sampled => {
                        let batch = mdp.rollout(&w, t, *episodes, seed, cfg.behavior)?;
                        (gridworld::build_round_loss(&batch, cfg.loss_kind)?, batch.total_reward() as f64)
                    }
                    LossEstimate::Expected => (
                        mdp.expected_round_loss(&w, t, cfg.behavior, cfg.loss_kind)?,
                        mdp.expected_reward(&w, t, cfg.behavior)? * *episodes as f64,
                    ),
                }
            }
            Env::Toy(stream) => (stream.round_loss(t)?, 0.0),
        };
        let rep = state.step(&loss, dom, &solver)?;
        cum_loss += rep.loss;
        cum_reward += reward;
        trace.losses.push(loss);
        trace.rewards.push(reward);
        trace.flags.push(!rep.solver_converged);
        trace.grad_sq.push(rep.grad_sq);
        trace.sigma.push(rep.sigma);
        trace.eta.push(rep.eta);
        trace.rows.push(RunRow {
            round: t,
            env_steps: t * m,
            loss: rep.loss,
            avg_cumulative_loss: cum_loss / t as f64,
            cumulative_regret: None,
            cumulative_reward: cum_reward,
            eta_t: rep.eta,
            sigma_t: rep.sigma,
            inner_iters: rep.inner_iters,
            solver_converged: rep.solver_converged,
        });
        trace.clock.push(start.elapsed().as_secs_f64());
    }
    trace.final_w = Some(state.w().clone());
    Ok(())
}

/// Runs every seed of `cfg`, in seed order. `jobs = 1` runs serially;
/// otherwise up to `jobs` runs execute at once (0 = all cores).
pub fn run_batch(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    if jobs == 1 {
        return cfg.seeds.iter().map(|&s| run(cfg, s)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| cfg.seeds.par_iter().map(|&s| run(cfg, s)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub eta: f64,
    /// Mean final average cumulative loss over the seeds; `inf` if any
    /// pilot failed or diverged.
    pub avg_cumulative_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Configuration with the schedule scale set to `eta`.
pub fn with_eta(base: &ExperimentConfig, eta: f64) -> Result<ExperimentConfig> {
    if !base.algo.uses_schedule() {
        return Err(Error::Config(format!("{} has no step size to tune", base.algo)));
    }
    let kind = base.resolve_schedule(base.seeds[0])?;
    if kind.scale().is_none() {
        return Err(Error::Config(format!("schedule {} has no tunable scale", kind.name())));
    }
    Ok(ExperimentConfig { schedule: ScheduleSpec::Fixed { schedule: kind.with_scale(eta) }, ..base.clone() })
}

fn mean_final_loss(cfg: &ExperimentConfig, jobs: usize) -> std::result::Result<f64, String> {
    let records = run_batch(cfg, jobs).map_err(|e| e.to_string())?;
    let mut total = 0.0;
    for r in &records {
        if !r.complete {
            return Err(r.error.clone().unwrap_or_else(|| "incomplete run".into()));
        }
        let v = r.final_avg_cumulative_loss();
        if !v.is_finite() {
            return Err("non-finite average loss".into());
        }
        total += v;
    }
    Ok(total / records.len() as f64)
}

/// Pilot runs for every `eta` at `pilot_interactions` total interactions of
/// `pilot_m` per round, ranked by mean final average cumulative loss
/// (ties by smaller eta; failures last).
pub fn grid_search(
    base: &ExperimentConfig,
    etas: &[f64],
    pilot_interactions: usize,
    pilot_m: usize,
    jobs: usize,
) -> Result<Vec<GridEntry>> {
    if etas.is_empty() {
        return Err(Error::Config("empty step-size grid".into()));
    }
    let mut entries = Vec::with_capacity(etas.len());
    for &eta in etas {
        let cfg = ExperimentConfig {
            interactions_per_round: pilot_m,
            total_interactions: pilot_interactions,
            checkpoints: Checkpoints::Off,
            interpolation: false,
            bounds: Vec::new(),
            ..with_eta(base, eta)?
        };
        cfg.validate()?;
        let (loss, failure) = match mean_final_loss(&cfg, jobs) {
            Ok(v) => (v, None),
            Err(e) => (f64::INFINITY, Some(e)),
        };
        entries.push(GridEntry { eta, avg_cumulative_loss: loss, failure });
    }
    if entries.iter().all(|e| e.failure.is_some()) {
        let detail: Vec<String> =
            entries.iter().map(|e| format!("eta={}: {}", e.eta, e.failure.as_deref().unwrap_or(""))).collect();
        return Err(Error::AllPilotsFailed(detail.join("; ")));
    }
    entries.sort_by(|a, b| a.avg_cumulative_loss.total_cmp(&b.avg_cumulative_loss).then(a.eta.total_cmp(&b.eta)));
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub ranking: Vec<GridEntry>,
    /// The top three re-evaluated at the full budget.
    pub finalists: Vec<GridEntry>,
    pub selected_eta: f64,
}

/// Grid search, then the best of the top three at the full budget.
pub fn tune(
    base: &ExperimentConfig,
    etas: &[f64],
    pilot_interactions: usize,
    pilot_m: usize,
    jobs: usize,
) -> Result<TuneResult> {
    let ranking = grid_search(base, etas, pilot_interactions, pilot_m, jobs)?;
    let mut finalists = Vec::new();
    for e in ranking.iter().filter(|e| e.failure.is_none()).take(3) {
        let cfg = ExperimentConfig {
            checkpoints: Checkpoints::Off,
            interpolation: false,
            bounds: Vec::new(),
            ..with_eta(base, e.eta)?
        };
        let (loss, failure) = match mean_final_loss(&cfg, jobs) {
            Ok(v) => (v, None),
            Err(err) => (f64::INFINITY, Some(err)),
        };
        finalists.push(GridEntry { eta: e.eta, avg_cumulative_loss: loss, failure });
    }
    let best = finalists
        .iter()
        .min_by(|a, b| a.avg_cumulative_loss.total_cmp(&b.avg_cumulative_loss).then(a.eta.total_cmp(&b.eta)))
        .ok_or_else(|| Error::AllPilotsFailed("no finalist".into()))?;
    Ok(TuneResult { selected_eta: best.eta, finalists: finalists.clone(), ranking })
}
