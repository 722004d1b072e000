//! Online learners. Each round the learner plays `w_t`, receives `l_t`, and
//! moves to `w_{t+1}`.
//!
//! | algo       | update                                                              |
//! |------------|---------------------------------------------------------------------|
//! | OGD        | `P(w_t - eta_t g_t)`                                                |
//! | AdaGrad    | OGD with `eta_t = alpha / sqrt(sum_{i<=t} |g_i|^2)`                 |
//! | FTL        | `argmin sum_{i<=t} l_i`                                             |
//! | FTRL       | `argmin sum l_i - <w, sum_{i<t} grad l_i(w_t)> + |w - w_t|^2/2eta_t` |
//! | AdaFTRL    | FTRL with the AdaGrad step                                          |
//! | AltFTRL    | `argmin sum l_i + |w|^2/2eta_t - <w, sum_{i<=t} sigma_i w_i>`       |
//! | FTRLNaive  | `argmin sum l_i + sum (sigma_i/2)|w - w_i|^2`                       |

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::loss::RoundLoss;
use crate::param::{self, ParamVector};
use crate::schedule::{ScheduleKind, Step, StepSchedule};
use crate::solvers::{self, Objective, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Ogd,
    AdaGrad,
    Ftl,
    Ftrl,
    AltFtrl,
    AdaFtrl,
    FtrlNaive,
}

impl Algo {
    pub const ALL: [Algo; 7] =
        [Algo::Ogd, Algo::AdaGrad, Algo::Ftl, Algo::Ftrl, Algo::AltFtrl, Algo::AdaFtrl, Algo::FtrlNaive];

    pub fn name(&self) -> &'static str {
        match self {
            Algo::Ogd => "ogd",
            Algo::AdaGrad => "adagrad",
            Algo::Ftl => "ftl",
            Algo::Ftrl => "ftrl",
            Algo::AltFtrl => "alt_ftrl",
            Algo::AdaFtrl => "adaftrl",
            Algo::FtrlNaive => "ftrl_naive",
        }
    }

    /// Whether the learner keeps past losses and solves an inner problem.
    pub fn retains_losses(&self) -> bool {
        !matches!(self, Algo::Ogd | Algo::AdaGrad)
    }

    /// Whether a step-size schedule affects the iterates.
    pub fn uses_schedule(&self) -> bool {
        !matches!(self, Algo::Ftl)
    }

    /// The schedule used when none is given. `alpha` is the default scale.
    pub fn default_schedule(&self, alpha: f64) -> ScheduleKind {
        match self {
            Algo::Ftl => ScheduleKind::Constant { eta: f64::INFINITY },
            Algo::Ogd => ScheduleKind::Constant { eta: alpha },
            Algo::AdaGrad | Algo::AdaFtrl => ScheduleKind::AdaptiveGradNorm { alpha },
            Algo::Ftrl | Algo::AltFtrl | Algo::FtrlNaive => ScheduleKind::InverseSqrtT { alpha },
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Algo::ALL
            .into_iter()
            .find(|a| {
                a.name() == norm
                    || (norm == "altftrl" && *a == Algo::AltFtrl)
                    || (norm == "ada_ftrl" && *a == Algo::AdaFtrl)
            })
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// What happened in one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundReport {
    /// `l_t(w_t)`
    pub loss: f64,
    /// `|grad l_t(w_t)|^2`
    pub grad_sq: f64,
    pub eta: f64,
    pub sigma: f64,
    pub inner_iters: usize,
    pub solver_converged: bool,
    pub solver_grad_norm: f64,
}

/// Mutable learner state, one per run.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    algo: Algo,
    w: ParamVector,
    history: Vec<RoundLoss>,
    weight_carry: Option<Vec<f64>>,
    iterate_history: Vec<ParamVector>,
    sigma_history: Vec<f64>,
    schedule: StepSchedule,
    round: usize,
}

impl OptimizerState {
    pub fn new(algo: Algo, w1: ParamVector, schedule: ScheduleKind) -> Result<Self> {
        let adaptive = matches!(schedule, ScheduleKind::AdaptiveGradNorm { .. });
        match algo {
            Algo::AdaGrad | Algo::AdaFtrl if !adaptive => {
                return Err(Error::Config(format!("{algo} needs the adaptive_grad_norm schedule")));
            }
            Algo::Ftrl | Algo::Ogd if adaptive => {
                return Err(Error::Config(format!(
                    "{algo} takes constant, inverse_sqrt_t or theorem2 schedules; use the adaptive variant instead"
                )));
            }
            _ => {}
        }
        let dim = w1.dim();
        Ok(Self {
            algo,
            w: w1,
            history: Vec::new(),
            weight_carry: (algo == Algo::AltFtrl).then(|| vec![0.0; dim]),
            iterate_history: Vec::new(),
            sigma_history: Vec::new(),
            schedule: StepSchedule::new(schedule)?,
            round: 0,
        })
    }

    pub fn algo(&self) -> Algo {
        self.algo
    }

    /// Current iterate `w_t` (the point played next round).
    pub fn w(&self) -> &ParamVector {
        &self.w
    }

    /// Completed rounds.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn schedule(&self) -> &StepSchedule {
        &self.schedule
    }

    pub fn history(&self) -> &[RoundLoss] {
        &self.history
    }

    /// Past iterates kept by naive FTRL; empty for every other learner.
    pub fn iterate_history(&self) -> &[ParamVector] {
        &self.iterate_history
    }

    pub fn sigma_history(&self) -> &[f64] {
        &self.sigma_history
    }

    /// `sum_{i<=t} sigma_i w_i` for Alt-FTRL.
    pub fn weight_carry(&self) -> Option<&[f64]> {
        self.weight_carry.as_deref()
    }

    /// Advances one round on `l`.
    pub fn step(&mut self, l: &RoundLoss, dom: &Domain, solver: &SolverConfig) -> Result<RoundReport> {
        match self.algo {
            Algo::Ogd => self.ogd_step(l, dom),
            Algo::AdaGrad => self.adagrad_step(l, dom),
            Algo::Ftl => self.ftl_step(l, dom, solver),
            Algo::Ftrl | Algo::AdaFtrl => self.ftrl_step(l, dom, solver),
            Algo::AltFtrl => self.alt_ftrl_step(l, dom, solver),
            Algo::FtrlNaive => self.ftrl_naive_step(l, dom, solver),
        }
    }

    fn observe(&self, l: &RoundLoss, dom: &Domain) -> Result<(f64, ParamVector)> {
        dom.check_compatible(self.w.dim())?;
        let (v, g) = l.value_and_gradient(&self.w)?;
        Ok((v, g))
    }

    fn expect(&self, allowed: &[Algo], op: &str) -> Result<()> {
        if allowed.contains(&self.algo) {
            Ok(())
        } else {
            Err(Error::Config(format!("{op} called on a {} learner", self.algo)))
        }
    }

    pub fn ogd_step(&mut self, l: &RoundLoss, dom: &Domain) -> Result<RoundReport> {
        self.expect(&[Algo::Ogd], "ogd_step")?;
        self.gradient_step(l, dom)
    }

    pub fn adagrad_step(&mut self, l: &RoundLoss, dom: &Domain) -> Result<RoundReport> {
        self.expect(&[Algo::AdaGrad], "adagrad_step")?;
        self.gradient_step(l, dom)
    }

    fn gradient_step(&mut self, l: &RoundLoss, dom: &Domain) -> Result<RoundReport> {
        let (loss, g) = self.observe(l, dom)?;
        let grad_sq = g.dot(&g);
        let step = self.schedule.advance(grad_sq)?;
        let mut next = self.w.as_slice().to_vec();
        if grad_sq > 0.0 {
            param::axpy(-step.eta, g.as_slice(), &mut next);
        }
        dom.project_in_place(&mut next);
        self.w = ParamVector::new(next)?;
        self.round += 1;
        Ok(RoundReport {
            loss,
            grad_sq,
            eta: step.eta,
            sigma: step.sigma,
            inner_iters: 0,
            solver_converged: true,
            solver_grad_norm: 0.0,
        })
    }

    pub fn ftl_step(&mut self, l: &RoundLoss, dom: &Domain, solver: &SolverConfig) -> Result<RoundReport> {
        self.expect(&[Algo::Ftl], "ftl_step")?;
        let (loss, g) = self.observe(l, dom)?;
        let grad_sq = g.dot(&g);
        let step = self.schedule.advance(grad_sq)?;
        self.history.push(l.clone());
        let objective = Objective::new(&self.history, self.w.dim())?;
        let report = self.inner_solve(&objective, dom, solver)?;
        Ok(self.apply(report, loss, grad_sq, step))
    }

    /// Reformulated update: the proximal sum collapses to one term centered at
    /// `w_t` plus a linear anchor recomputed at `w_t` from the retained losses.
    pub fn ftrl_step(&mut self, l: &RoundLoss, dom: &Domain, solver: &SolverConfig) -> Result<RoundReport> {
        self.expect(&[Algo::Ftrl, Algo::AdaFtrl], "ftrl_step")?;
        let (loss, g) = self.observe(l, dom)?;
        let grad_sq = g.dot(&g);
        let step = self.schedule.advance(grad_sq)?;
        let dim = self.w.dim();
        let anchor = if self.history.is_empty() {
            ParamVector::zeros(dim)
        } else {
            Objective::new(&self.history, dim)?.gradient(&self.w)?
        };
        let neg_anchor = ParamVector::new(anchor.as_slice().iter().map(|v| -v).collect())?;
        self.history.push(l.clone());
        let objective =
            Objective::new(&self.history, dim)?.with_linear(&neg_anchor)?.with_prox(1.0 / step.eta, &self.w)?;
        let report = self.inner_solve(&objective, dom, solver)?;
        Ok(self.apply(report, loss, grad_sq, step))
    }

    pub fn alt_ftrl_step(&mut self, l: &RoundLoss, dom: &Domain, solver: &SolverConfig) -> Result<RoundReport> {
        self.expect(&[Algo::AltFtrl], "alt_ftrl_step")?;
        let (loss, g) = self.observe(l, dom)?;
        let grad_sq = g.dot(&g);
        let step = self.schedule.advance(grad_sq)?;
        let dim = self.w.dim();
        let carry = self.weight_carry.get_or_insert_with(|| vec![0.0; dim]);
        param::axpy(step.sigma, self.w.as_slice(), carry);
        let neg_carry = ParamVector::new(carry.iter().map(|v| -v).collect())?;
        self.history.push(l.clone());
        let objective = Objective::new(&self.history, dim)?
            .with_linear(&neg_carry)?
            .with_prox(1.0 / step.eta, &ParamVector::zeros(dim))?;
        let report = self.inner_solve(&objective, dom, solver)?;
        Ok(self.apply(report, loss, grad_sq, step))
    }

    /// Reference form storing every iterate.
    pub fn ftrl_naive_step(&mut self, l: &RoundLoss, dom: &Domain, solver: &SolverConfig) -> Result<RoundReport> {
        self.expect(&[Algo::FtrlNaive], "ftrl_naive_step")?;
        let (loss, g) = self.observe(l, dom)?;
        let grad_sq = g.dot(&g);
        let step = self.schedule.advance(grad_sq)?;
        self.history.push(l.clone());
        self.iterate_history.push(self.w.clone());
        self.sigma_history.push(step.sigma);
        let mut objective = Objective::new(&self.history, self.w.dim())?;
        for (sigma, wi) in self.sigma_history.iter().zip(&self.iterate_history) {
            objective = objective.with_prox(*sigma, wi)?;
        }
        let report = self.inner_solve(&objective, dom, solver)?;
        Ok(self.apply(report, loss, grad_sq, step))
    }

    fn inner_solve(&self, objective: &Objective, dom: &Domain, solver: &SolverConfig) -> Result<solvers::SolveReport> {
        let cfg = SolverConfig { rng_seed: solver.rng_seed.wrapping_add(self.round as u64), ..*solver };
        solvers::solve(objective, dom, &self.w, &cfg)
    }

    fn apply(&mut self, report: solvers::SolveReport, loss: f64, grad_sq: f64, step: Step) -> RoundReport {
        self.w = report.solution;
        self.round += 1;
        RoundReport {
            loss,
            grad_sq,
            eta: step.eta,
            sigma: step.sigma,
            inner_iters: report.iters_used,
            solver_converged: report.converged,
            solver_grad_norm: report.final_grad_norm,
        }
    }
}
