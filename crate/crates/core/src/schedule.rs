//! Step-size schedules `eta_t` and the induced regularization increments
//! `sigma_t = 1/eta_t - 1/eta_{t-1}` (with `1/eta_0 = 0`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor on the squared-gradient accumulator of the adaptive schedule.
pub const ACCUMULATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Fixed `eta`. `eta = inf` turns the regularizer off.
    Constant { eta: f64 },
    /// `eta_t = alpha / sqrt(t)`.
    InverseSqrtT { alpha: f64 },
    /// `eta_t = alpha / sqrt(sum_{i<=t} |g_i|^2)`.
    AdaptiveGradNorm { alpha: f64 },
    /// `eta = min{eps_budget^{-1/2}, 1/(2L)}`, constant in `t`.
    Theorem2 { smoothness: f64, eps_budget: f64 },
}

impl ScheduleKind {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScheduleKind::Constant { eta } => eta > 0.0,
            ScheduleKind::InverseSqrtT { alpha } | ScheduleKind::AdaptiveGradNorm { alpha } => {
                alpha > 0.0 && alpha.is_finite()
            }
            ScheduleKind::Theorem2 { smoothness, eps_budget } => {
                smoothness > 0.0 && smoothness.is_finite() && eps_budget >= 0.0 && eps_budget.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid step schedule {self:?}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScheduleKind::Constant { .. } => "constant",
            ScheduleKind::InverseSqrtT { .. } => "inverse_sqrt_t",
            ScheduleKind::AdaptiveGradNorm { .. } => "adaptive_grad_norm",
            ScheduleKind::Theorem2 { .. } => "theorem2",
        }
    }

    /// The tunable scale (`eta` or `alpha`), if the kind has one.
    pub fn scale(&self) -> Option<f64> {
        match *self {
            ScheduleKind::Constant { eta } => Some(eta),
            ScheduleKind::InverseSqrtT { alpha } | ScheduleKind::AdaptiveGradNorm { alpha } => Some(alpha),
            ScheduleKind::Theorem2 { .. } => None,
        }
    }

    /// Same kind with its scale replaced; `Theorem2` is returned unchanged.
    pub fn with_scale(self, v: f64) -> Self {
        match self {
            ScheduleKind::Constant { .. } => ScheduleKind::Constant { eta: v },
            ScheduleKind::InverseSqrtT { .. } => ScheduleKind::InverseSqrtT { alpha: v },
            ScheduleKind::AdaptiveGradNorm { .. } => ScheduleKind::AdaptiveGradNorm { alpha: v },
            other => other,
        }
    }
}

/// Step produced for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub eta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    kind: ScheduleKind,
    grad_sq_sum: f64,
    inv_eta_prev: f64,
    round: u64,
}

impl StepSchedule {
    pub fn new(kind: ScheduleKind) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, grad_sq_sum: 0.0, inv_eta_prev: 0.0, round: 0 })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// Accumulated `sum |g_i|^2` so far.
    pub fn grad_sq_sum(&self) -> f64 {
        self.grad_sq_sum
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// `1 / eta` of the last issued step (0 before the first).
    pub fn inv_eta(&self) -> f64 {
        self.inv_eta_prev
    }

    /// Records round `t`'s squared gradient norm and returns `(eta_t, sigma_t)`.
    pub fn advance(&mut self, grad_sq: f64) -> Result<Step> {
        if !(grad_sq >= 0.0 && grad_sq.is_finite()) {
            return Err(Error::NonFinite(format!("squared gradient norm {grad_sq}")));
        }
        self.round += 1;
        self.grad_sq_sum += grad_sq;
        let eta = match self.kind {
            ScheduleKind::Constant { eta } => eta,
            ScheduleKind::InverseSqrtT { alpha } => alpha / (self.round as f64).sqrt(),
            ScheduleKind::AdaptiveGradNorm { alpha } => alpha / self.grad_sq_sum.max(ACCUMULATOR_FLOOR).sqrt(),
            ScheduleKind::Theorem2 { smoothness, eps_budget } => theorem2_eta(smoothness, eps_budget),
        };
        let inv = match self.kind {
            // exact sqrt(t) / alpha avoids drift from inverting a rounded eta
            ScheduleKind::InverseSqrtT { alpha } => (self.round as f64).sqrt() / alpha,
            _ => 1.0 / eta,
        };
        // the adaptive accumulator only grows, so sigma >= 0 up to rounding
        let sigma = (inv - self.inv_eta_prev).max(0.0);
        self.inv_eta_prev = inv;
        Ok(Step { eta, sigma })
    }
}

/// `min{(sum eps^2)^{-1/2}, 1/(2L)}`; a zero budget leaves `1/(2L)`.
pub fn theorem2_eta(smoothness: f64, eps_budget: f64) -> f64 {
    let cap = 1.0 / (2.0 * smoothness);
    if eps_budget > 0.0 {
        cap.min(1.0 / eps_budget.sqrt())
    } else {
        cap
    }
}
