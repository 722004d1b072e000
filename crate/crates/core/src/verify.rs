//! Property suites shared by the test targets and the `verify` command.
//!
//! Every case is seeded and records enough parameters to be replayed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::envs::gridworld::{self, Behavior, ExpertOracle, Mdp};
use crate::envs::toy::Regime;
use crate::error::{Error, Result};
use crate::harness::{self, DomainSpec, EnvSpec, ExperimentConfig, ScheduleSpec};
use crate::loss::{LossKind, RoundLoss};
use crate::metrics::{self, Checkpoints, Theorem};
use crate::optimizers::{Algo, OptimizerState};
use crate::param::ParamVector;
use crate::schedule::ScheduleKind;
use crate::solvers::SolverConfig;

/// Per-coordinate tolerance between the three FTRL forms.
pub const REFORMULATION_TOL: f64 = 1e-8;
/// Per-coordinate tolerance between OGD and linearized FTRL.
pub const OGD_RECOVERY_TOL: f64 = 1e-10;
/// Largest interpolation error accepted on a realizable stream.
pub const INTERPOLATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Reformulation,
    OgdRecovery,
    Bounds,
    Interpolation,
    Lemmas,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] =
        [Suite::Reformulation, Suite::OgdRecovery, Suite::Bounds, Suite::Interpolation, Suite::Lemmas];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Reformulation => "reformulation",
            Suite::OgdRecovery => "ogd_recovery",
            Suite::Bounds => "bounds",
            Suite::Interpolation => "interpolation",
            Suite::Lemmas => "lemmas",
            Suite::All => "all",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Suite::All]
            .into_iter()
            .chain(Suite::EACH)
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

/// Deliberate faults for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Alt-FTRL runs with `sigma_t` doubled.
    WrongSigma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub suite: Suite,
    pub case: String,
    pub seed: u64,
    pub passed: bool,
    /// The quantity compared against `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    /// Everything needed to rerun the case.
    pub replay: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub cases: Vec<CaseResult>,
}

impl SuiteReport {
    fn new(suite: Suite, cases: Vec<CaseResult>) -> Self {
        Self { suite, passed: cases.iter().all(|c| c.passed), cases }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.passed)
    }
}

/// Runs `suite` (or every suite) over `seeds`.
pub fn run_suite(suite: Suite, seeds: &[u64], fault: Option<Fault>) -> Result<Vec<SuiteReport>> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    suites
        .into_iter()
        .map(|s| {
            let cases = match s {
                Suite::Reformulation => reformulation(seeds, fault)?,
                Suite::OgdRecovery => ogd_recovery(seeds)?,
                Suite::Bounds => bounds(seeds)?,
                Suite::Interpolation => interpolation(seeds)?,
                Suite::Lemmas => lemmas(seeds)?,
                Suite::All => unreachable!(),
            };
            Ok(SuiteReport::new(s, cases))
        })
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// A stream of strongly convex least-squares losses in dimension `d`:
/// `d + 2` Gaussian samples per round, so every round is full rank.
pub fn quadratic_stream(seed: u64, d: usize, rounds: usize) -> Result<Vec<RoundLoss>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d + 2;
    (0..rounds)
        .map(|_| {
            let x = gaussian(&mut rng, n * d);
            let y = gaussian(&mut rng, n);
            RoundLoss::new(x, y, n, d, 1, LossKind::Squared)
        })
        .collect()
}

/// Largest per-coordinate gap between two iterate sequences.
fn max_gap(a: &[ParamVector], b: &[ParamVector]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
}

fn play(
    algo: Algo,
    schedule: ScheduleKind,
    losses: &[RoundLoss],
    dom: &Domain,
    solver: &SolverConfig,
) -> Result<Vec<ParamVector>> {
    let dim = losses[0].dim();
    let mut s = OptimizerState::new(algo, dom.project(&ParamVector::zeros(dim)), schedule)?;
    let mut out = Vec::with_capacity(losses.len() + 1);
    out.push(s.w().clone());
    for l in losses {
        s.step(l, dom, solver)?;
        out.push(s.w().clone());
    }
    Ok(out)
}

/// Equivalence of FTRL, Alt-FTRL and naive FTRL with `1/eta_t = sqrt(t)`
/// on `50` streams per seed (dimension `1..=5`, `T = 20`).
pub fn reformulation(seeds: &[u64], fault: Option<Fault>) -> Result<Vec<CaseResult>> {
    reformulation_with(seeds, fault, &reformulation_solver())
}

/// Inner solver for the equivalence checks.
pub fn reformulation_solver() -> SolverConfig {
    SolverConfig { armijo_c: 0.5, grad_tol: 1e-10, ..SolverConfig::default() }
}

pub fn reformulation_with(seeds: &[u64], fault: Option<Fault>, solver: &SolverConfig) -> Result<Vec<CaseResult>> {
    let schedule = ScheduleKind::InverseSqrtT { alpha: 1.0 };
    let solver = *solver;
    let mut cases = Vec::new();
    for &seed in seeds {
        let mut worst = 0.0f64;
        let mut worst_stream = 0;
        for k in 0..50u64 {
            let stream_seed = crate::envs::derive_seed(seed, k);
            let d = 1 + (k as usize % 5);
            let losses = quadratic_stream(stream_seed, d, 20)?;
            let dom = Domain::Unconstrained;
            let alt_schedule = match fault {
                Some(Fault::WrongSigma) => ScheduleKind::InverseSqrtT { alpha: 0.5 },
                None => schedule,
            };
            let a = play(Algo::Ftrl, schedule, &losses, &dom, &solver)?;
            let b = play(Algo::AltFtrl, alt_schedule, &losses, &dom, &solver)?;
            let c = play(Algo::FtrlNaive, schedule, &losses, &dom, &solver)?;
            let gap = max_gap(&a, &b).max(max_gap(&a, &c)).max(max_gap(&b, &c));
            if gap > worst || k == 0 {
                worst = worst.max(gap);
                worst_stream = k;
            }
        }
        cases.push(CaseResult {
            suite: Suite::Reformulation,
            case: "ftrl_alt_naive_iterates".into(),
            seed,
            passed: worst <= REFORMULATION_TOL,
            measured: worst,
            tolerance: REFORMULATION_TOL,
            replay: serde_json::json!({
                "streams": 50, "rounds": 20, "worst_stream": worst_stream,
                "schedule": schedule, "fault": fault, "solver": solver,
            }),
        });
    }
    Ok(cases)
}

/// OGD iterates against reformulated FTRL on linearized losses with the same
/// constant step, on a ball-constrained toy stream (`T = 50`).
pub fn ogd_recovery(seeds: &[u64]) -> Result<Vec<CaseResult>> {
    let eta = 0.05;
    let mut cases = Vec::new();
    for &seed in seeds {
        let cfg = ExperimentConfig {
            algo: Algo::Ogd,
            domain: DomainSpec::Ball { radius: 1.0 },
            ..harness::preset("toy_adversarial")?.with_rounds(50)
        };
        let losses = harness::oblivious_stream(&cfg, seed)?;
        let dom = cfg.domain.build(cfg.env.param_dim())?;
        let schedule = ScheduleKind::Constant { eta };
        let w1 = dom.project(&ParamVector::zeros(cfg.env.param_dim()));
        let mut ogd = OptimizerState::new(Algo::Ogd, w1.clone(), schedule)?;
        let mut ftrl = OptimizerState::new(Algo::Ftrl, w1, schedule)?;
        let solver = SolverConfig::default();
        let mut worst = 0.0f64;
        for l in &losses {
            let lin = l.linearize(ftrl.w())?;
            ogd.step(l, &dom, &solver)?;
            ftrl.step(&lin, &dom, &solver)?;
            worst = worst.max(ogd.w().max_abs_diff(ftrl.w()));
        }
        cases.push(CaseResult {
            suite: Suite::OgdRecovery,
            case: "ogd_vs_linearized_ftrl".into(),
            seed,
            passed: worst <= OGD_RECOVERY_TOL,
            measured: worst,
            tolerance: OGD_RECOVERY_TOL,
            replay: serde_json::json!({ "preset": "toy_adversarial", "rounds": 50, "eta": eta, "radius": 1.0 }),
        });
    }
    Ok(cases)
}

/// The theorems exercised by the conformance suite.
pub const CONFORMANCE_THEOREMS: [Theorem; 7] = [
    Theorem::FtrlRegret,
    Theorem::AdaFtrlRegret,
    Theorem::FtrlRegretNonsmooth,
    Theorem::AdaFtrlRegretNonsmooth,
    Theorem::FtlStronglyConvex,
    Theorem::FtlStronglyConvexNonsmooth,
    Theorem::FtrlMainLemma,
];

/// A synthetic stream meeting `theorem`'s hypotheses on the ball of radius
/// 2 with `T = 100`.
///
/// Smooth streams keep every per-round least-squares minimizer inside the
/// ball (small `W*`, small noise, two samples per coordinate), which the
/// smooth bounds rely on. Lipschitz streams use the absolute loss.
pub fn conformance_config(theorem: Theorem, seeds: Vec<u64>) -> Result<ExperimentConfig> {
    let (algo, schedule) = match theorem {
        Theorem::FtrlRegret => (Algo::Ftrl, ScheduleSpec::Theorem2FromStream),
        Theorem::AdaFtrlRegret | Theorem::AdaFtrlRegretNonsmooth => (Algo::AdaFtrl, ScheduleSpec::Auto),
        Theorem::FtrlRegretNonsmooth | Theorem::FtrlMainLemma => (Algo::Ftrl, ScheduleSpec::Auto),
        Theorem::FtlStronglyConvex | Theorem::FtlStronglyConvexNonsmooth => (Algo::Ftl, ScheduleSpec::Auto),
        Theorem::ConstantRegret => {
            return Ok(ExperimentConfig { algo: Algo::Ftl, seeds, ..harness::preset("gridworld_stationary")? })
        }
    };
    let lipschitz = matches!(theorem, Theorem::FtrlRegretNonsmooth | Theorem::AdaFtrlRegretNonsmooth);
    let (d_feature, m, loss_kind) = if lipschitz { (2, 2, LossKind::Absolute) } else { (3, 6, LossKind::Squared) };
    Ok(ExperimentConfig {
        name: format!("conformance_{}", theorem.id()),
        env: EnvSpec::Toy {
            d_feature,
            d_output: 1,
            regime: Regime::Adversarial,
            noise_std: 0.1,
            w_star_norm: Some(0.5),
        },
        algo,
        schedule,
        inner_solver: SolverConfig::default(),
        interactions_per_round: m,
        total_interactions: 100 * m,
        behavior: Behavior::Agent,
        seeds,
        loss_kind,
        domain: DomainSpec::Ball { radius: 2.0 },
        checkpoints: Checkpoints::Final,
        interpolation: !lipschitz,
        bounds: vec![theorem],
    })
}

/// One case per (theorem, seed); refusals and incomplete runs fail.
pub fn bounds(seeds: &[u64]) -> Result<Vec<CaseResult>> {
    let mut cases = Vec::new();
    for th in CONFORMANCE_THEOREMS.into_iter().chain([Theorem::ConstantRegret]) {
        let cfg = conformance_config(th, seeds.to_vec())?;
        for rec in harness::run_batch(&cfg, 0)? {
            let (passed, measured, tol, detail) = match rec.bound_reports.first() {
                Some(b) => (b.satisfied, b.lhs, b.rhs, serde_json::to_value(b).unwrap_or_default()),
                None => {
                    let why = rec
                        .bound_refusals
                        .first()
                        .map(|r| r.reason.clone())
                        .or(rec.error.clone())
                        .unwrap_or_else(|| "no report".into());
                    (false, f64::NAN, f64::NAN, serde_json::json!({ "refusal": why }))
                }
            };
            cases.push(CaseResult {
                suite: Suite::Bounds,
                case: th.id().into(),
                seed: rec.seed,
                passed,
                measured,
                tolerance: tol,
                replay: serde_json::json!({ "config": cfg, "report": detail }),
            });
        }
    }
    Ok(cases)
}

/// Greedy agreement of FTL iterates with a stationary realizable expert on
/// every cell the expert reaches at steps `tau < t`, for rounds `2..=T`.
/// Returns the number of disagreements.
pub fn interp_occ_disagreements(rounds: usize) -> Result<usize> {
    let goal = 24;
    let expert = ExpertOracle::goal_seeking(7, 7, goal);
    let ExpertOracle::Stationary { actions } = &expert else {
        return Err(Error::Config("goal-seeking expert is stationary".into()));
    };
    let mdp = Mdp::standard(expert.clone());
    let cells = mdp.n_cells();
    let mut expert_w = vec![0.0; mdp.param_dim()];
    for (cell, &a) in actions.iter().enumerate() {
        expert_w[a * cells + cell] = 1.0;
    }
    let expert_w = ParamVector::new(expert_w)?;
    let mut reach = vec![false; cells];
    let dom = Domain::Unconstrained;
    let solver = SolverConfig::default();
    let mut s = OptimizerState::new(
        Algo::Ftl,
        ParamVector::zeros(mdp.param_dim()),
        ScheduleKind::Constant { eta: f64::INFINITY },
    )?;
    let mut bad = 0;
    for t in 1..=rounds {
        if t >= 2 {
            for (cell, r) in reach.iter().enumerate() {
                if *r && gridworld::greedy_action(s.w().as_slice(), cells, cell) != actions[cell] {
                    bad += 1;
                }
            }
        }
        if t - 1 < mdp.horizon {
            let occ = mdp.occupancy(&expert_w, t - 1)?;
            reach.iter_mut().zip(&occ).for_each(|(r, p)| *r |= *p > 0.0);
        }
        let l = mdp.expected_round_loss(s.w(), t, Behavior::Agent, LossKind::Squared)?;
        s.step(&l, &dom, &solver)?;
    }
    Ok(bad)
}

/// Interpolation checks: `eps_t^2` vanishes on the realizable toy stream for
/// FTL, FTRL and AdaFTRL, and FTL agrees with a realizable gridworld expert.
pub fn interpolation(seeds: &[u64]) -> Result<Vec<CaseResult>> {
    let mut cases = Vec::new();
    for &seed in seeds {
        for algo in [Algo::Ftl, Algo::Ftrl, Algo::AdaFtrl] {
            let cfg = ExperimentConfig {
                algo,
                seeds: vec![seed],
                checkpoints: Checkpoints::Final,
                ..harness::preset("toy_simple")?
            };
            let rec = harness::run(&cfg, seed)?;
            let worst = rec.ledger.interpolation_errors.iter().copied().fold(0.0, f64::max);
            let ok = rec.complete && rec.ledger.interpolation_errors.len() == cfg.rounds();
            cases.push(CaseResult {
                suite: Suite::Interpolation,
                case: format!("max_eps_sq_{}", algo.name()),
                seed,
                passed: ok && worst <= INTERPOLATION_TOL,
                measured: worst,
                tolerance: INTERPOLATION_TOL,
                replay: serde_json::json!({ "preset": "toy_simple", "algo": algo }),
            });
        }
    }
    let bad = interp_occ_disagreements(100)?;
    cases.push(CaseResult {
        suite: Suite::Interpolation,
        case: "ftl_agrees_with_stationary_expert".into(),
        seed: 0,
        passed: bad == 0,
        measured: bad as f64,
        tolerance: 0.0,
        replay: serde_json::json!({ "goal": 24, "rounds": 100, "loss": "l2" }),
    });
    Ok(cases)
}

/// Draws `(a, b, x)` with `a, b >= 0`; half of the draws land inside the
/// lemma's hypothesis region by construction.
fn quadratic_draws(seed: u64, n: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let a = 10f64.powf(rng.random_range(-3.0..3.0));
            let b = 10f64.powf(rng.random_range(-3.0..3.0));
            let root = (a + (a * a + 4.0 * a * b).sqrt()) / 2.0;
            let x = if i % 2 == 0 { rng.random_range(-root..=root) } else { rng.random_range(-2.0 * root..2.0 * root) };
            (a, b, x)
        })
        .collect()
}

/// Quadratic-inequality lemma and the AdaGrad-style sum, 10^4 draws each.
pub fn lemmas(seeds: &[u64]) -> Result<Vec<CaseResult>> {
    let mut cases = Vec::new();
    for &seed in seeds {
        let draws = quadratic_draws(seed, 10_000);
        let mut tested = 0;
        let mut violations = 0;
        for &(a, b, x) in &draws {
            match metrics::quadratic_lemma(a, b, x) {
                Some(true) => tested += 1,
                Some(false) => {
                    tested += 1;
                    violations += 1
                }
                None => {}
            }
        }
        cases.push(CaseResult {
            suite: Suite::Lemmas,
            case: "quadratic_inequality".into(),
            seed,
            passed: violations == 0 && tested > 0,
            measured: violations as f64,
            tolerance: 0.0,
            replay: serde_json::json!({ "draws": 10_000, "in_hypothesis": tested }),
        });

        let mut rng = ChaCha8Rng::seed_from_u64(crate::envs::derive_seed(seed, 1));
        let mut worst_ratio = 0.0f64;
        let mut failures = 0;
        for _ in 0..10_000 {
            let n = rng.random_range(1..=50);
            let norms: Vec<f64> =
                (0..n).map(|_| rng.random::<f64>() * 10f64.powf(rng.random_range(-2.0..2.0))).collect();
            let p = metrics::adagrad_inequality_probe(&norms)?;
            worst_ratio = worst_ratio.max(p.ratio);
            if !p.holds {
                failures += 1;
            }
        }
        cases.push(CaseResult {
            suite: Suite::Lemmas,
            case: "adagrad_factor_two".into(),
            seed,
            passed: failures == 0,
            measured: worst_ratio,
            tolerance: 2.0,
            replay: serde_json::json!({ "sequences": 10_000, "max_len": 50, "failures": failures }),
        });
    }
    Ok(cases)
}
