//! Regret accounting and numeric checks of regret bounds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::loss::{self, RoundLoss};
use crate::optimizers::Algo;
use crate::param::ParamVector;
use crate::schedule::{theorem2_eta, ScheduleKind};
use crate::solvers::{self, Objective, SolverConfig};

/// Gradient tolerance for best-in-hindsight solves.
pub const HINDSIGHT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hindsight {
    pub point: ParamVector,
    pub value: f64,
    pub converged: bool,
    pub grad_norm: f64,
}

/// `min_{w in dom} sum_t l_t(w)`, warm-started at `start` when given.
pub fn hindsight(
    losses: &[RoundLoss],
    dom: &Domain,
    solver: &SolverConfig,
    start: Option<&ParamVector>,
) -> Result<Hindsight> {
    let Some(first) = losses.first() else {
        return Err(Error::Shape("hindsight needs at least one loss".into()));
    };
    let dim = first.dim();
    let objective = Objective::new(losses, dim)?;
    if let Domain::Unconstrained = dom {
        if let Some(point) = loss::pooled_least_squares(losses, dim) {
            let point = point?;
            let g = objective.gradient(&point)?;
            return Ok(Hindsight { value: objective.value(&point)?, converged: true, grad_norm: g.norm(), point });
        }
    }
    let cfg = SolverConfig { grad_tol: HINDSIGHT_TOL, ..*solver };
    let x0 = match start {
        Some(s) => s.clone(),
        None => ParamVector::zeros(dim),
    };
    let r = solvers::minimize_accurately(&objective, dom, &x0, &cfg)?;
    Ok(Hindsight { point: r.solution, value: r.objective_value, converged: r.converged, grad_norm: r.final_grad_norm })
}

/// Rounds at which cumulative regret is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Checkpoints {
    /// Every round up to 250 rounds, otherwise 50 log-spaced rounds.
    Auto,
    EveryRound,
    LogSpaced {
        count: usize,
    },
    /// Only the final round.
    Final,
    /// No regret tracking.
    Off,
}

impl Checkpoints {
    /// 1-based rounds, ascending, always ending at `t_max` (unless off).
    pub fn rounds(&self, t_max: usize) -> Vec<usize> {
        if t_max == 0 {
            return Vec::new();
        }
        match *self {
            Checkpoints::Off => Vec::new(),
            Checkpoints::Final => vec![t_max],
            Checkpoints::EveryRound => (1..=t_max).collect(),
            Checkpoints::Auto if t_max <= 250 => (1..=t_max).collect(),
            Checkpoints::Auto => log_spaced(t_max, 50),
            Checkpoints::LogSpaced { count } => log_spaced(t_max, count.max(1)),
        }
    }
}

fn log_spaced(t_max: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let f = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
            ((t_max as f64).powf(f).round() as usize).clamp(1, t_max)
        })
        .collect();
    out.push(t_max);
    out.sort_unstable();
    out.dedup();
    out
}

/// Cumulative regret at each checkpoint, warm-starting each hindsight
/// solve at the previous one. Entries for other rounds are `None`.
pub fn regret(
    per_round_loss: &[f64],
    losses: &[RoundLoss],
    dom: &Domain,
    solver: &SolverConfig,
    checkpoints: Checkpoints,
) -> Result<(Vec<Option<f64>>, Option<Hindsight>)> {
    if per_round_loss.len() != losses.len() {
        return Err(Error::Shape("per-round losses and loss functions are misaligned".into()));
    }
    let t_max = losses.len();
    let mut out = vec![None; t_max];
    let mut last: Option<Hindsight> = None;
    let mut cum = 0.0;
    let mut done = 0;
    for t in checkpoints.rounds(t_max) {
        cum += per_round_loss[done..t].iter().sum::<f64>();
        done = t;
        let h = hindsight(&losses[..t], dom, solver, last.as_ref().map(|h| &h.point))?;
        out[t - 1] = Some(cum - h.value);
        last = Some(h);
    }
    Ok((out, last))
}

/// `max(0, l(w_hindsight) - min_w l(w))`.
pub fn interpolation_error(l: &RoundLoss, hindsight_point: &ParamVector, dom: &Domain) -> Result<f64> {
    let at_h = l.value(hindsight_point)?;
    let best = l.exact_min(dom)?;
    Ok((at_h - best.value).max(0.0))
}

/// Everything measured about a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub per_round_loss: Vec<f64>,
    pub per_round_reward: Vec<f64>,
    pub hindsight_value: Option<f64>,
    pub hindsight_point: Option<ParamVector>,
    pub cumulative_regret: Vec<Option<f64>>,
    pub avg_cumulative_loss: Vec<f64>,
    /// `eps_t^2`; empty when not computed.
    pub interpolation_errors: Vec<f64>,
    /// True where the inner solver missed its tolerance.
    pub solver_flags: Vec<bool>,
}

impl RegretLedger {
    /// Ledger without regret (losses and rewards only).
    pub fn from_losses(per_round_loss: Vec<f64>, per_round_reward: Vec<f64>, solver_flags: Vec<bool>) -> Self {
        let mut acc = 0.0;
        let avg = per_round_loss
            .iter()
            .enumerate()
            .map(|(i, l)| {
                acc += l;
                acc / (i + 1) as f64
            })
            .collect();
        Self {
            cumulative_regret: vec![None; per_round_loss.len()],
            per_round_loss,
            per_round_reward,
            hindsight_value: None,
            hindsight_point: None,
            avg_cumulative_loss: avg,
            interpolation_errors: Vec::new(),
            solver_flags,
        }
    }

    /// Fills regret at `checkpoints` and, if asked, `eps_t^2` against the
    /// final hindsight point.
    pub fn attach_regret(
        &mut self,
        losses: &[RoundLoss],
        dom: &Domain,
        solver: &SolverConfig,
        checkpoints: Checkpoints,
        with_interpolation: bool,
    ) -> Result<()> {
        let (cum, h) = regret(&self.per_round_loss, losses, dom, solver, checkpoints)?;
        self.cumulative_regret = cum;
        if let Some(h) = h {
            if with_interpolation && h.point.dim() > 0 && self.per_round_loss.len() == losses.len() {
                // eps_t is defined against the full-stream hindsight point
                let full = if checkpoints.rounds(losses.len()).last() == Some(&losses.len()) {
                    h.clone()
                } else {
                    hindsight(losses, dom, solver, Some(&h.point))?
                };
                self.interpolation_errors =
                    losses.iter().map(|l| interpolation_error(l, &full.point, dom)).collect::<Result<_>>()?;
            }
            self.hindsight_value = Some(h.value);
            self.hindsight_point = Some(h.point);
        }
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        self.per_round_loss.len()
    }

    /// Regret at the last round, if computed.
    pub fn final_regret(&self) -> Option<f64> {
        self.cumulative_regret.last().copied().flatten()
    }

    pub fn sum_interpolation_errors(&self) -> f64 {
        self.interpolation_errors.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// `R(T) <= C / (1 - gamma)` for FTL on a realizable tabular problem.
    ConstantRegret,
    /// `2 D^2 L + (D^2 + 2L) sqrt(sum eps^2)`
    FtrlRegret,
    /// `2L (a/2 + D^2/2a)^2 + sqrt(2L)(a/2 + D^2/2a) sqrt(sum eps^2)`
    #[serde(rename = "adaftrl_regret")]
    AdaFtrlRegret,
    /// `(sqrt T / 2)(G^2 a + D^2 / a)`
    #[serde(rename = "ftrl_regret_ns")]
    FtrlRegretNonsmooth,
    /// `(a/2 + D^2/2a) G sqrt T`
    #[serde(rename = "adaftrl_regret_ns")]
    AdaFtrlRegretNonsmooth,
    /// `(D L / mu)(1 + ln T)`
    #[serde(rename = "ftl_regret_sc")]
    FtlStronglyConvex,
    /// `(G^2 / 2 mu)(1 + ln T)`
    #[serde(rename = "ftl_regret_sc_ns")]
    FtlStronglyConvexNonsmooth,
    /// `sum |g_t|^2 / (2 sum_{i<=t}(sigma_i + mu_i)) + (D^2/2) sum sigma_t`
    FtrlMainLemma,
}

impl Theorem {
    pub const ALL: [Theorem; 8] = [
        Theorem::ConstantRegret,
        Theorem::FtrlRegret,
        Theorem::AdaFtrlRegret,
        Theorem::FtrlRegretNonsmooth,
        Theorem::AdaFtrlRegretNonsmooth,
        Theorem::FtlStronglyConvex,
        Theorem::FtlStronglyConvexNonsmooth,
        Theorem::FtrlMainLemma,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Theorem::ConstantRegret => "constant_regret",
            Theorem::FtrlRegret => "ftrl_regret",
            Theorem::AdaFtrlRegret => "adaftrl_regret",
            Theorem::FtrlRegretNonsmooth => "ftrl_regret_ns",
            Theorem::AdaFtrlRegretNonsmooth => "adaftrl_regret_ns",
            Theorem::FtlStronglyConvex => "ftl_regret_sc",
            Theorem::FtlStronglyConvexNonsmooth => "ftl_regret_sc_ns",
            Theorem::FtrlMainLemma => "ftrl_main_lemma",
        }
    }
}

impl std::str::FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL.into_iter().find(|t| t.id() == s).ok_or_else(|| Error::Config(format!("unknown theorem `{s}`")))
    }
}

/// Measured facts about a run that the bound checkers consume.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundInputs {
    pub algo: Option<Algo>,
    pub schedule: Option<ScheduleKind>,
    /// Domain diameter.
    pub diameter: f64,
    /// Max per-round smoothness; `None` if some round is not smooth.
    pub smoothness: Option<f64>,
    /// Min per-round strong convexity.
    pub strong_convexity: f64,
    /// Max per-round Lipschitz constant on the domain.
    pub lipschitz: Option<f64>,
    /// Per-round strong convexity `mu_t`.
    pub mu_per_round: Vec<f64>,
    /// `|grad l_t(w_t)|^2` per round.
    pub grad_sq: Vec<f64>,
    /// `sigma_t` per round.
    pub sigma: Vec<f64>,
    /// `eta_t` per round.
    pub eta: Vec<f64>,
    /// Discount and `max_{tau, t}` expected divergence (tabular runs only).
    pub gamma: Option<f64>,
    pub c_max: Option<f64>,
    pub horizon: Option<usize>,
}

impl BoundInputs {
    /// Per-loss constants over the stream.
    pub fn measure(losses: &[RoundLoss], dom: &Domain) -> Self {
        let mut smooth = Some(0.0f64);
        let mut lip = Some(0.0f64);
        let mut mu = f64::INFINITY;
        let mut mus = Vec::with_capacity(losses.len());
        for l in losses {
            let m = l.meta(dom);
            smooth = match (smooth, m.smoothness_l) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
            lip = match (lip, m.lipschitz_g) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
            mu = mu.min(m.strong_convexity_mu);
            mus.push(m.strong_convexity_mu);
        }
        Self {
            diameter: dom.diameter(),
            smoothness: smooth,
            strong_convexity: if mu.is_finite() { mu } else { 0.0 },
            lipschitz: lip,
            mu_per_round: mus,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: Theorem,
    pub lhs: f64,
    pub rhs: f64,
    pub constants: BTreeMap<String, f64>,
    pub satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn refuse(theorem: Theorem, reason: impl Into<String>) -> Error {
    Error::HypothesisMismatch { theorem: theorem.id().into(), reason: reason.into() }
}

const FTRL_FAMILY: [Algo; 3] = [Algo::Ftrl, Algo::AltFtrl, Algo::FtrlNaive];

/// Evaluates one bound against a finished ledger. Refuses with
/// [`Error::HypothesisMismatch`] when the run does not meet the theorem's
/// assumptions.
pub fn check_bound(theorem: Theorem, ledger: &RegretLedger, inp: &BoundInputs) -> Result<BoundReport> {
    let lhs = ledger.final_regret().ok_or_else(|| refuse(theorem, "final-round regret was not computed"))?;
    let t = ledger.rounds() as f64;
    let d = inp.diameter;
    let algo = inp.algo.ok_or_else(|| refuse(theorem, "algorithm unknown"))?;
    let mut c = BTreeMap::new();
    c.insert("T".to_string(), t);
    let need_bounded = |c: &mut BTreeMap<String, f64>| -> Result<f64> {
        if !d.is_finite() {
            return Err(refuse(theorem, "domain is unbounded"));
        }
        c.insert("D".into(), d);
        Ok(d)
    };
    let need_l = |c: &mut BTreeMap<String, f64>| -> Result<f64> {
        let l = inp.smoothness.ok_or_else(|| refuse(theorem, "losses are not smooth"))?;
        c.insert("L".into(), l);
        Ok(l)
    };
    let need_g = |c: &mut BTreeMap<String, f64>| -> Result<f64> {
        let g = inp.lipschitz.ok_or_else(|| refuse(theorem, "losses are not Lipschitz on the domain"))?;
        c.insert("G".into(), g);
        Ok(g)
    };
    let need_mu = |c: &mut BTreeMap<String, f64>| -> Result<f64> {
        let mu = inp.strong_convexity;
        if mu <= 0.0 {
            return Err(refuse(theorem, "losses are not strongly convex"));
        }
        c.insert("mu".into(), mu);
        Ok(mu)
    };
    let eps_sq = |c: &mut BTreeMap<String, f64>| -> Result<f64> {
        if ledger.interpolation_errors.len() != ledger.rounds() {
            return Err(refuse(theorem, "interpolation errors were not computed"));
        }
        let s = ledger.sum_interpolation_errors();
        c.insert("sum_eps_sq".into(), s);
        Ok(s)
    };
    let alpha_of = |c: &mut BTreeMap<String, f64>, want: &str| -> Result<f64> {
        let a = match (inp.schedule, want) {
            (Some(ScheduleKind::InverseSqrtT { alpha }), "inverse_sqrt_t") => alpha,
            (Some(ScheduleKind::AdaptiveGradNorm { alpha }), "adaptive_grad_norm") => alpha,
            (s, _) => return Err(refuse(theorem, format!("needs a {want} schedule, run used {s:?}"))),
        };
        c.insert("alpha".into(), a);
        Ok(a)
    };
    let mut note = None;

    let rhs = match theorem {
        Theorem::ConstantRegret => {
            if algo != Algo::Ftl {
                return Err(refuse(theorem, "applies to FTL only"));
            }
            let gamma = inp.gamma.ok_or_else(|| refuse(theorem, "not a tabular run"))?;
            let cm = inp.c_max.ok_or_else(|| refuse(theorem, "occupancy constant unavailable"))?;
            c.insert("gamma".into(), gamma);
            c.insert("C".into(), cm);
            if let Some(h) = inp.horizon {
                note = Some(format!("C maximized over steps tau < {h} (finite horizon) and rounds t <= T"));
            }
            cm / (1.0 - gamma)
        }
        Theorem::FtrlRegret => {
            if !FTRL_FAMILY.contains(&algo) {
                return Err(refuse(theorem, "applies to proximal FTRL"));
            }
            let (d, l, s) = (need_bounded(&mut c)?, need_l(&mut c)?, eps_sq(&mut c)?);
            let Some(ScheduleKind::Theorem2 { .. }) = inp.schedule else {
                return Err(refuse(theorem, "needs the theorem2 schedule"));
            };
            let want = theorem2_eta(l, s);
            let used = inp.eta.first().copied().unwrap_or(f64::NAN);
            // written so that a NaN eta also refuses
            let matches = (used - want).abs() <= 1e-6 * want;
            if !matches {
                return Err(refuse(theorem, format!("eta {used} differs from min{{(sum eps^2)^-1/2, 1/2L}} = {want}")));
            }
            c.insert("eta".into(), want);
            2.0 * d * d * l + (d * d + 2.0 * l) * s.sqrt()
        }
        Theorem::AdaFtrlRegret => {
            if algo != Algo::AdaFtrl {
                return Err(refuse(theorem, "applies to AdaFTRL"));
            }
            let (d, l, s) = (need_bounded(&mut c)?, need_l(&mut c)?, eps_sq(&mut c)?);
            let a = alpha_of(&mut c, "adaptive_grad_norm")?;
            let k = a / 2.0 + d * d / (2.0 * a);
            2.0 * l * k * k + (2.0 * l).sqrt() * k * s.sqrt()
        }
        Theorem::FtrlRegretNonsmooth => {
            if !FTRL_FAMILY.contains(&algo) {
                return Err(refuse(theorem, "applies to proximal FTRL"));
            }
            let (d, g) = (need_bounded(&mut c)?, need_g(&mut c)?);
            let a = alpha_of(&mut c, "inverse_sqrt_t")?;
            t.sqrt() / 2.0 * (g * g * a + d * d / a)
        }
        Theorem::AdaFtrlRegretNonsmooth => {
            if algo != Algo::AdaFtrl {
                return Err(refuse(theorem, "applies to AdaFTRL"));
            }
            let (d, g) = (need_bounded(&mut c)?, need_g(&mut c)?);
            let a = alpha_of(&mut c, "adaptive_grad_norm")?;
            (a / 2.0 + d * d / (2.0 * a)) * g * t.sqrt()
        }
        Theorem::FtlStronglyConvex => {
            if algo != Algo::Ftl {
                return Err(refuse(theorem, "applies to FTL only"));
            }
            let (d, l, mu) = (need_bounded(&mut c)?, need_l(&mut c)?, need_mu(&mut c)?);
            d * l / mu * (1.0 + t.ln())
        }
        Theorem::FtlStronglyConvexNonsmooth => {
            if algo != Algo::Ftl {
                return Err(refuse(theorem, "applies to FTL only"));
            }
            let (g, mu) = (need_g(&mut c)?, need_mu(&mut c)?);
            g * g / (2.0 * mu) * (1.0 + t.ln())
        }
        Theorem::FtrlMainLemma => {
            if !FTRL_FAMILY.contains(&algo) && algo != Algo::AdaFtrl {
                return Err(refuse(theorem, "applies to proximal FTRL"));
            }
            let d = need_bounded(&mut c)?;
            let n = ledger.rounds();
            if inp.grad_sq.len() != n || inp.sigma.len() != n || inp.mu_per_round.len() != n {
                return Err(refuse(theorem, "per-round gradients, sigmas or strong-convexity moduli missing"));
            }
            let mut acc = 0.0;
            let mut first = 0.0;
            for i in 0..n {
                acc += inp.sigma[i] + inp.mu_per_round[i];
                if acc <= 0.0 {
                    if inp.grad_sq[i] > 0.0 {
                        return Err(refuse(theorem, "regularization is zero while the gradient is not"));
                    }
                    continue;
                }
                first += inp.grad_sq[i] / (2.0 * acc);
            }
            let sig: f64 = inp.sigma.iter().sum();
            c.insert("sum_sigma".into(), sig);
            first + d * d / 2.0 * sig
        }
    };
    c.insert("lhs".into(), lhs);
    Ok(BoundReport { theorem, lhs, rhs, satisfied: lhs <= rhs * (1.0 + 1e-9), constants: c, note })
}

/// Result of [`adagrad_inequality_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdagradProbe {
    /// `sum_t g_t^2 / sqrt(sum_{i<=t} g_i^2)`
    pub lhs: f64,
    /// `2 sqrt(sum g_t^2)`
    pub rhs2x: f64,
    /// `lhs / sqrt(sum g_t^2)`; the factor-one claim needs this `<= 1`.
    pub ratio: f64,
    pub holds: bool,
}

pub fn adagrad_inequality_probe(grad_norms: &[f64]) -> Result<AdagradProbe> {
    if grad_norms.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::Config("gradient norms must be finite and nonnegative".into()));
    }
    let mut acc = 0.0;
    let mut lhs = 0.0;
    for g in grad_norms {
        let sq = g * g;
        acc += sq;
        if acc > 0.0 {
            lhs += sq / acc.sqrt();
        }
    }
    if acc == 0.0 {
        return Ok(AdagradProbe { lhs: 0.0, rhs2x: 0.0, ratio: 0.0, holds: true });
    }
    let root = acc.sqrt();
    Ok(AdagradProbe { lhs, rhs2x: 2.0 * root, ratio: lhs / root, holds: lhs <= 2.0 * root * (1.0 + 1e-12) })
}

/// If `x^2 <= a (x + b)` with `a, b >= 0`, then `x <= a + sqrt(a b)`.
/// Returns `None` when the premise does not hold.
pub fn quadratic_lemma(a: f64, b: f64, x: f64) -> Option<bool> {
    if a < 0.0 || b < 0.0 || x * x > a * (x + b) {
        return None;
    }
    Some(x <= (a + (a * b).sqrt()) * (1.0 + 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossKind;

    fn target(c: f64) -> RoundLoss {
        RoundLoss::new(vec![1.0], vec![c], 1, 1, 1, LossKind::Squared).unwrap()
    }

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hindsight_examples() {
        let cfg = SolverConfig::default();
        let losses = [target(0.0), target(2.0)];
        let h = hindsight(&losses, &Domain::Unconstrained, &cfg, None).unwrap();
        assert!((h.point[0] - 1.0).abs() < 1e-12 && (h.value - 1.0).abs() < 1e-12);

        let ball = Domain::centered_ball(1, 10.0).unwrap();
        let h = hindsight(&losses, &ball, &cfg, None).unwrap();
        assert!((h.point[0] - 1.0).abs() < 1e-9 && (h.value - 1.0).abs() < 1e-12);

        let one = [target(3.5)];
        let h = hindsight(&one, &Domain::Unconstrained, &cfg, None).unwrap();
        let m = one[0].exact_min(&Domain::Unconstrained).unwrap();
        assert_eq!(h.point, m.point);
    }

    #[test]
    fn regret_examples() {
        let cfg = SolverConfig::default();
        let losses = [target(0.0), target(2.0)];
        let played = [0.0, 2.0]; // losses at w1 = 0, w2 = 0
        let (r, _) = regret(&played, &losses, &Domain::Unconstrained, &cfg, Checkpoints::EveryRound).unwrap();
        assert_eq!(r[0], Some(0.0));
        assert!((r[1].unwrap() - 1.0).abs() < 1e-12);

        let same = [target(1.0), target(1.0), target(1.0)];
        let (r, _) = regret(&[0.0; 3], &same, &Domain::Unconstrained, &cfg, Checkpoints::EveryRound).unwrap();
        assert!(r.iter().all(|v| v.unwrap().abs() < 1e-15));
    }

    #[test]
    fn interpolation_error_examples() {
        let dom = Domain::Unconstrained;
        for c in [0.0, 2.0] {
            assert!((interpolation_error(&target(c), &pv(&[1.0]), &dom).unwrap() - 0.5).abs() < 1e-12);
        }
        assert_eq!(interpolation_error(&target(4.0), &pv(&[4.0]), &dom).unwrap(), 0.0);
    }

    #[test]
    fn checkpoint_rules() {
        assert_eq!(Checkpoints::Auto.rounds(5), vec![1, 2, 3, 4, 5]);
        let big = Checkpoints::Auto.rounds(10_000);
        assert!(big.len() <= 51 && big[0] == 1 && *big.last().unwrap() == 10_000);
        assert!(big.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Checkpoints::Final.rounds(7), vec![7]);
        assert!(Checkpoints::Off.rounds(7).is_empty());
    }

    #[test]
    fn ledger_averages() {
        let l = RegretLedger::from_losses(vec![1.0, 3.0, 2.0], vec![0.0; 3], vec![false; 3]);
        assert_eq!(l.avg_cumulative_loss, vec![1.0, 2.0, 2.0]);
    }

    #[test]
    fn adagrad_probe_examples() {
        let p = adagrad_inequality_probe(&[2.5]).unwrap();
        assert!((p.lhs - 2.5).abs() < 1e-15 && (p.ratio - 1.0).abs() < 1e-15);
        let p = adagrad_inequality_probe(&[3.0, 4.0]).unwrap();
        assert!((p.lhs - 6.2).abs() < 1e-12);
        assert_eq!(p.rhs2x, 10.0);
        assert!(p.holds);
        let z = adagrad_inequality_probe(&[0.0, 0.0]).unwrap();
        assert_eq!((z.lhs, z.rhs2x), (0.0, 0.0));
    }

    #[test]
    fn quadratic_lemma_edge_cases() {
        assert_eq!(quadratic_lemma(1.0, 0.0, 1.0), Some(true));
        assert_eq!(quadratic_lemma(1.0, 1.0, 5.0), None);
        assert_eq!(quadratic_lemma(0.0, 3.0, 0.0), Some(true));
    }

    fn ledger_with(regret: f64, rounds: usize, eps: f64) -> RegretLedger {
        let mut l = RegretLedger::from_losses(vec![0.0; rounds], vec![0.0; rounds], vec![false; rounds]);
        l.cumulative_regret[rounds - 1] = Some(regret);
        l.interpolation_errors = vec![eps; rounds];
        l
    }

    #[test]
    fn ftrl_bound_zero_interpolation_term() {
        let inp = BoundInputs {
            algo: Some(Algo::Ftrl),
            schedule: Some(ScheduleKind::Theorem2 { smoothness: 2.0, eps_budget: 0.0 }),
            diameter: 3.0,
            smoothness: Some(2.0),
            eta: vec![0.25; 4],
            ..Default::default()
        };
        let r = check_bound(Theorem::FtrlRegret, &ledger_with(1.0, 4, 0.0), &inp).unwrap();
        assert_eq!(r.rhs, 2.0 * 9.0 * 2.0);
        assert!(r.satisfied);
    }

    #[test]
    fn bound_refusals_are_typed() {
        let inp = BoundInputs { algo: Some(Algo::Ogd), diameter: 1.0, smoothness: Some(1.0), ..Default::default() };
        let e = check_bound(Theorem::FtrlRegret, &ledger_with(0.0, 3, 0.0), &inp).unwrap_err();
        assert!(matches!(e, Error::HypothesisMismatch { .. }));
        let inp = BoundInputs { algo: Some(Algo::Ftl), diameter: f64::INFINITY, ..Default::default() };
        let e = check_bound(Theorem::FtlStronglyConvex, &ledger_with(0.0, 3, 0.0), &inp).unwrap_err();
        assert!(matches!(e, Error::HypothesisMismatch { .. }));
    }

    #[test]
    fn nonsmooth_rhs_formula() {
        let inp = BoundInputs {
            algo: Some(Algo::Ftrl),
            schedule: Some(ScheduleKind::InverseSqrtT { alpha: 2.0 }),
            diameter: 4.0,
            lipschitz: Some(3.0),
            ..Default::default()
        };
        let r = check_bound(Theorem::FtrlRegretNonsmooth, &ledger_with(5.0, 16, 0.0), &inp).unwrap();
        assert_eq!(r.rhs, 4.0 / 2.0 * (9.0 * 2.0 + 16.0 / 2.0));
    }

    #[test]
    fn serde_names_match_ids() {
        for t in Theorem::ALL {
            assert_eq!(serde_json::to_value(t).unwrap(), t.id());
            assert_eq!(t.id().parse::<Theorem>().unwrap(), t);
        }
    }
}
