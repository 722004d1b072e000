//! Inner solvers for the `argmin` subproblems of FTL and FTRL.
//!
//! Objectives have the composite form
//!
//! ```text
//! f(w) = sum_i l_i(w) + <linear, w> + sum_j (c_j / 2) |w - a_j|^2
//! ```
//!
//! The retained losses are pooled once per solve so each evaluation touches
//! every distinct sample exactly once.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::loss::{Pool, RoundLoss};
use crate::param::{self, ParamVector};

/// Smallest trial step before backtracking gives up.
pub const BACKTRACK_FLOOR: f64 = 1e-20;

/// Relative size of objective changes treated as rounding noise.
const VALUE_NOISE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Projected gradient descent with Armijo backtracking.
    ArmijoGd,
    /// One sampled loss per step with a `1/L_i` step, then the proximal map.
    ProxSgd,
    /// One sampled loss per step with Armijo backtracking on that loss, then
    /// the proximal map.
    SlsSgd,
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "armijo_gd" | "armijo" | "gd" => Ok(SolverMethod::ArmijoGd),
            "prox_sgd" => Ok(SolverMethod::ProxSgd),
            "sls_sgd" | "sls" => Ok(SolverMethod::SlsSgd),
            other => Err(Error::Config(format!("unknown solver method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub init_step: f64,
    pub method: SolverMethod,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            grad_tol: 1e-8,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            init_step: 1.0,
            method: SolverMethod::ArmijoGd,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("solver config: {what}")));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return bad("grad_tol must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.init_step > 0.0 && self.init_step.is_finite()) {
            return bad("init_step must be positive");
        }
        Ok(())
    }

    pub fn with_grad_tol(self, grad_tol: f64) -> Self {
        Self { grad_tol, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: ParamVector,
    pub final_grad_norm: f64,
    pub iters_used: usize,
    pub converged: bool,
    pub objective_value: f64,
    /// Backtracking fell below [`BACKTRACK_FLOOR`]; the best point is returned.
    pub stalled: bool,
}

/// Composite objective over retained losses.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    losses: &'a [RoundLoss],
    pool: Pool,
    linear: Option<Vec<f64>>,
    prox: Vec<(f64, Vec<f64>)>,
    dim: usize,
}

impl<'a> Objective<'a> {
    pub fn new(losses: &'a [RoundLoss], dim: usize) -> Result<Self> {
        Ok(Self { losses, pool: Pool::build(losses, dim)?, linear: None, prox: Vec::new(), dim })
    }

    /// Adds `<v, w>`.
    pub fn with_linear(mut self, v: &ParamVector) -> Result<Self> {
        v.check_dim(self.dim, "linear term")?;
        let acc = self.linear.get_or_insert_with(|| vec![0.0; v.dim()]);
        param::axpy(1.0, v.as_slice(), acc);
        Ok(self)
    }

    /// Adds `(coef / 2) |w - center|^2`. Zero coefficients are dropped.
    pub fn with_prox(mut self, coef: f64, center: &ParamVector) -> Result<Self> {
        center.check_dim(self.dim, "proximal center")?;
        if !(coef >= 0.0 && coef.is_finite()) {
            return Err(Error::Config(format!("proximal coefficient must be finite and >= 0, got {coef}")));
        }
        if coef > 0.0 {
            self.prox.push((coef, center.as_slice().to_vec()));
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_losses(&self) -> usize {
        self.losses.len()
    }

    /// Number of stored proximal centers.
    pub fn n_prox_terms(&self) -> usize {
        self.prox.len()
    }

    fn extras(&self, w: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut total = 0.0;
        let mut grad = grad;
        if let Some(v) = &self.linear {
            total += param::dot(v, w);
            if let Some(g) = grad.as_deref_mut() {
                param::axpy(1.0, v, g);
            }
        }
        for (c, a) in &self.prox {
            let mut sq = 0.0;
            for i in 0..w.len() {
                let d = w[i] - a[i];
                sq += d * d;
                if let Some(g) = grad.as_deref_mut() {
                    g[i] += c * d;
                }
            }
            total += 0.5 * c * sq;
        }
        total
    }

    pub(crate) fn value_raw(&self, w: &[f64]) -> f64 {
        self.pool.accumulate(w, None) + self.extras(w, None)
    }

    pub(crate) fn value_grad_raw(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let v = self.pool.accumulate(w, Some(grad));
        v + self.extras(w, Some(grad))
    }

    pub fn value(&self, w: &ParamVector) -> Result<f64> {
        w.check_dim(self.dim, "objective argument")?;
        Ok(self.value_raw(w.as_slice()))
    }

    pub fn gradient(&self, w: &ParamVector) -> Result<ParamVector> {
        w.check_dim(self.dim, "objective argument")?;
        let mut g = vec![0.0; self.dim];
        self.value_grad_raw(w.as_slice(), &mut g);
        ParamVector::new(g)
    }

    /// All proximal terms folded into one `(C / 2) |w - a|^2` plus a constant.
    fn combined_prox(&self) -> Option<(f64, Vec<f64>)> {
        let total: f64 = self.prox.iter().map(|(c, _)| c).sum();
        if total <= 0.0 {
            return None;
        }
        let mut center = vec![0.0; self.dim];
        for (c, a) in &self.prox {
            param::axpy(c / total, a, &mut center);
        }
        Some((total, center))
    }

    fn smoothed(&self, delta: f64) -> Self {
        Self { pool: self.pool.smoothed(delta), ..self.clone() }
    }
}

/// Norm of the projected-gradient map `w - P(w - g)`; equals `|g|` when
/// unconstrained.
fn stationarity(dom: &Domain, w: &[f64], g: &[f64]) -> f64 {
    if let Domain::Unconstrained = dom {
        return param::norm(g);
    }
    let mut p: Vec<f64> = w.iter().zip(g).map(|(a, b)| a - b).collect();
    dom.project_in_place(&mut p);
    param::distance(w, &p)
}

/// Minimizes `objective` over `dom` starting from `start`.
pub fn solve(objective: &Objective, dom: &Domain, start: &ParamVector, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    start.check_dim(objective.dim, "solver start")?;
    dom.check_compatible(objective.dim)?;
    if let Some(report) = isotropic_closed_form(objective, dom, cfg)? {
        return Ok(report);
    }
    match cfg.method {
        SolverMethod::ArmijoGd => armijo_gd(objective, dom, start, cfg),
        SolverMethod::ProxSgd | SolverMethod::SlsSgd => stochastic(objective, dom, start, cfg),
    }
}

/// Objectives made only of linear and proximal terms have Hessian `C * I`,
/// so the constrained minimizer is the projection of the free one.
fn isotropic_closed_form(objective: &Objective, dom: &Domain, cfg: &SolverConfig) -> Result<Option<SolveReport>> {
    if !objective.pool.groups.is_empty() {
        return Ok(None);
    }
    let Some((c, center)) = objective.combined_prox() else { return Ok(None) };
    let mut v = vec![0.0; objective.dim];
    if let Some(s) = &objective.pool.slope {
        param::axpy(1.0, s, &mut v);
    }
    if let Some(l) = &objective.linear {
        param::axpy(1.0, l, &mut v);
    }
    let mut w: Vec<f64> = center.iter().zip(&v).map(|(a, g)| a - g / c).collect();
    dom.project_in_place(&mut w);
    finish(objective, dom, w, 1, false, cfg).map(Some)
}

fn finish(
    objective: &Objective,
    dom: &Domain,
    w: Vec<f64>,
    iters: usize,
    stalled: bool,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let mut g = vec![0.0; objective.dim];
    let value = objective.value_grad_raw(&w, &mut g);
    if !value.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("objective at solver output".into()));
    }
    let gn = stationarity(dom, &w, &g);
    Ok(SolveReport {
        solution: ParamVector::new(w)?,
        final_grad_norm: gn,
        iters_used: iters,
        converged: gn <= cfg.grad_tol,
        objective_value: value,
        stalled,
    })
}

fn armijo_gd(objective: &Objective, dom: &Domain, start: &ParamVector, cfg: &SolverConfig) -> Result<SolveReport> {
    let n = objective.dim;
    let mut w = start.as_slice().to_vec();
    dom.project_in_place(&mut w);
    let mut g = vec![0.0; n];
    let mut f = objective.value_grad_raw(&w, &mut g);
    if !f.is_finite() {
        return Err(Error::NonFinite("objective at solver start".into()));
    }
    let mut gn = stationarity(dom, &w, &g);
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut iters = 0;
    let mut stalled = false;
    while iters < cfg.max_iters && gn > cfg.grad_tol {
        let noise = VALUE_NOISE * f.abs();
        let mut step = cfg.init_step;
        let accepted = loop {
            for i in 0..n {
                trial[i] = w[i] - step * g[i];
            }
            dom.project_in_place(&mut trial);
            let f_trial = objective.value_raw(&trial);
            if f_trial.is_finite() {
                if f - f_trial > noise {
                    // sufficient decrease measured on the projected step;
                    // reduces to f - c * s * |g|^2 without constraints
                    let moved = param::distance(&w, &trial);
                    if f_trial <= f - cfg.armijo_c / step * moved * moved {
                        break Some(objective.value_grad_raw(&trial, &mut g_trial));
                    }
                } else if f_trial <= f + noise {
                    // value change is rounding noise: measure the decrease
                    // with the trapezoid rule on gradients instead
                    let ft = objective.value_grad_raw(&trial, &mut g_trial);
                    let mut decrease = 0.0;
                    let mut moved_sq = 0.0;
                    for i in 0..n {
                        let dw = w[i] - trial[i];
                        decrease += 0.5 * (g[i] + g_trial[i]) * dw;
                        moved_sq += dw * dw;
                    }
                    if moved_sq > 0.0 && decrease >= cfg.armijo_c / step * moved_sq {
                        break Some(ft);
                    }
                }
            }
            step *= cfg.backtrack_factor;
            if step < BACKTRACK_FLOOR {
                break None;
            }
        };
        let Some(f_new) = accepted else {
            stalled = true;
            break;
        };
        std::mem::swap(&mut w, &mut trial);
        std::mem::swap(&mut g, &mut g_trial);
        f = f_new;
        gn = stationarity(dom, &w, &g);
        iters += 1;
    }
    finish(objective, dom, w, iters, stalled, cfg)
}

fn stochastic(objective: &Objective, dom: &Domain, start: &ParamVector, cfg: &SolverConfig) -> Result<SolveReport> {
    let n = objective.dim;
    let m = objective.losses.len();
    let mut w = start.as_slice().to_vec();
    dom.project_in_place(&mut w);
    if m == 0 {
        return armijo_gd(objective, dom, start, cfg);
    }
    let prox = objective.combined_prox();
    let scale = m as f64;
    let smoothness: Vec<Option<f64>> = match cfg.method {
        SolverMethod::ProxSgd => objective.losses.iter().map(|l| l.meta(&Domain::Unconstrained).smoothness_l).collect(),
        _ => Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut g = vec![0.0; n];
    let mut full = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut iters = 0;
    let mut stalled = false;

    // sampled function: m * l_i(w) + <linear, w>
    let sampled = |i: usize, w: &[f64], grad: Option<&mut [f64]>| -> f64 {
        let mut grad = grad;
        if let Some(gr) = grad.as_deref_mut() {
            gr.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut v = scale * objective.losses[i].eval_raw(w, grad.as_deref_mut());
        if let Some(gr) = grad.as_deref_mut() {
            gr.iter_mut().for_each(|x| *x *= scale);
        }
        if let Some(lin) = &objective.linear {
            v += param::dot(lin, w);
            if let Some(gr) = grad {
                param::axpy(1.0, lin, gr);
            }
        }
        v
    };

    loop {
        if iters % m == 0 {
            objective.value_grad_raw(&w, &mut full);
            if stationarity(dom, &w, &full) <= cfg.grad_tol {
                break;
            }
        }
        if iters >= cfg.max_iters {
            break;
        }
        let i = rng.random_range(0..m);
        let fi = sampled(i, &w, Some(&mut g));
        let step = match cfg.method {
            SolverMethod::ProxSgd => match smoothness[i] {
                Some(l) if l > 0.0 => cfg.init_step / (scale * l),
                _ => cfg.init_step,
            },
            _ => {
                let gsq = param::dot(&g, &g);
                let mut s = cfg.init_step;
                loop {
                    for k in 0..n {
                        trial[k] = w[k] - s * g[k];
                    }
                    let ft = sampled(i, &trial, None);
                    if ft.is_finite() && ft <= fi - cfg.armijo_c * s * gsq {
                        break s;
                    }
                    s *= cfg.backtrack_factor;
                    if s < BACKTRACK_FLOOR {
                        stalled = true;
                        break 0.0;
                    }
                }
            }
        };
        if stalled {
            break;
        }
        for k in 0..n {
            trial[k] = w[k] - step * g[k];
        }
        match &prox {
            Some((c, a)) => prox_in_place(&mut trial, a, step, 1.0 / c, dom),
            None => dom.project_in_place(&mut trial),
        }
        std::mem::swap(&mut w, &mut trial);
        iters += 1;
    }
    finish(objective, dom, w, iters, stalled, cfg)
}

fn prox_in_place(w: &mut [f64], anchor: &[f64], step: f64, eta: f64, dom: &Domain) {
    let r = step / eta;
    if r.is_infinite() {
        w.copy_from_slice(anchor);
    } else {
        for (wi, ai) in w.iter_mut().zip(anchor) {
            *wi = (*wi + r * ai) / (1.0 + r);
        }
    }
    dom.project_in_place(w);
}

/// Proximal map of `(1 / 2 eta) |u - anchor|^2` with step `step`:
/// `P((w + (step/eta) anchor) / (1 + step/eta))`.
pub fn prox_step(w: &ParamVector, anchor: &ParamVector, step: f64, eta: f64, dom: &Domain) -> Result<ParamVector> {
    anchor.check_dim(w.dim(), "prox anchor")?;
    if !(step > 0.0 && eta > 0.0) || step.is_nan() || eta.is_nan() {
        return Err(Error::Config("prox step and eta must be positive".into()));
    }
    let mut out = w.as_slice().to_vec();
    prox_in_place(&mut out, anchor.as_slice(), step, eta, dom);
    ParamVector::new(out)
}

/// High-accuracy minimization used for best-in-hindsight and per-round
/// minima. Objectives with absolute-loss terms are first minimized through
/// a Huber continuation (`delta = 1e-1 .. 1e-9`), since plain subgradient
/// backtracking stalls at kinks; the better point under the true objective
/// wins.
pub fn minimize_accurately(
    objective: &Objective,
    dom: &Domain,
    start: &ParamVector,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let cfg = SolverConfig { method: SolverMethod::ArmijoGd, ..*cfg };
    let direct = solve(objective, dom, start, &cfg)?;
    if !objective.pool.has_absolute() {
        return Ok(direct);
    }
    let mut w = start.clone();
    let mut delta = 1e-1;
    while delta >= 1e-9 {
        let smooth = objective.smoothed(delta);
        w = solve(&smooth, dom, &w, &cfg)?.solution;
        delta *= 0.1;
    }
    let smoothed = finish(objective, dom, w.into_inner(), cfg.max_iters, false, &cfg)?;
    if smoothed.objective_value < direct.objective_value {
        Ok(smoothed)
    } else {
        Ok(direct)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossKind;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    /// `f(w) = sum_k (h_k / 2) w_k^2 + ...` realized as squared losses on unit features.
    fn diag_quadratic(curv: &[f64], targets: &[f64]) -> Vec<RoundLoss> {
        let d = curv.len();
        curv.iter()
            .zip(targets)
            .enumerate()
            .map(|(k, (&h, &c))| {
                let mut x = vec![0.0; d];
                x[k] = 1.0;
                RoundLoss::new(x, vec![c], 1, d, 1, LossKind::Squared).unwrap().with_weight(h).unwrap()
            })
            .collect()
    }

    #[test]
    fn first_trial_step_accepted_on_unit_quadratic() {
        let losses = diag_quadratic(&[1.0], &[0.0]);
        let obj = Objective::new(&losses, 1).unwrap();
        let r = solve(&obj, &Domain::Unconstrained, &pv(&[2.0]), &SolverConfig::default()).unwrap();
        assert_eq!(r.iters_used, 1);
        assert_eq!(r.solution[0], 0.0);
        assert!(r.converged);
    }

    #[test]
    fn shifted_quadratic_converges_to_target() {
        for c in [-7.0, 0.3, 12.5] {
            let losses = diag_quadratic(&[1.0], &[c]);
            let obj = Objective::new(&losses, 1).unwrap();
            let r = solve(&obj, &Domain::Unconstrained, &pv(&[0.0]), &SolverConfig::default()).unwrap();
            assert!((r.solution[0] - c).abs() < 1e-8);
        }
    }

    #[test]
    fn ill_scaled_quadratic_within_budget() {
        let losses = diag_quadratic(&[100.0, 1.0], &[0.0, 0.0]);
        let obj = Objective::new(&losses, 2).unwrap();
        let r = solve(&obj, &Domain::Unconstrained, &pv(&[1.0, 1.0]), &SolverConfig::default()).unwrap();
        assert!(r.converged && r.final_grad_norm <= 1e-8, "{r:?}");
        assert!(r.iters_used <= 1000);
    }

    #[test]
    fn armijo_values_are_monotone() {
        let losses = diag_quadratic(&[100.0, 1.0, 10.0], &[1.0, -2.0, 0.5]);
        let obj = Objective::new(&losses, 3).unwrap();
        let mut w = pv(&[5.0, 5.0, 5.0]);
        let mut prev = obj.value(&w).unwrap();
        let one = SolverConfig { max_iters: 1, ..SolverConfig::default() };
        for _ in 0..200 {
            w = solve(&obj, &Domain::Unconstrained, &w, &one).unwrap().solution;
            let v = obj.value(&w).unwrap();
            assert!(v <= prev + 1e-12 * prev);
            prev = v;
        }
    }

    #[test]
    fn prox_and_linear_terms() {
        // f(w) = 0.5 (w - 1)^2 + <-2, w> + (3 / 2)(w - 4)^2 -> w = (1 + 2 + 12) / 4
        let losses = diag_quadratic(&[1.0], &[1.0]);
        let obj =
            Objective::new(&losses, 1).unwrap().with_linear(&pv(&[-2.0])).unwrap().with_prox(3.0, &pv(&[4.0])).unwrap();
        let r =
            solve(&obj, &Domain::Unconstrained, &pv(&[0.0]), &SolverConfig::default().with_grad_tol(1e-12)).unwrap();
        assert!((r.solution[0] - 15.0 / 4.0).abs() < 1e-11);
    }

    #[test]
    fn constrained_solve_stops_on_boundary() {
        let losses = diag_quadratic(&[1.0, 1.0], &[3.0, 4.0]);
        let obj = Objective::new(&losses, 2).unwrap();
        let dom = Domain::centered_ball(2, 1.0).unwrap();
        let r = solve(&obj, &dom, &pv(&[0.0, 0.0]), &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.solution.distance(&pv(&[0.6, 0.8])) < 1e-7);
    }

    #[test]
    fn absolute_kink_does_not_loop_forever() {
        let losses = vec![RoundLoss::new(vec![1.0], vec![0.0], 1, 1, 1, LossKind::Absolute).unwrap()];
        let obj = Objective::new(&losses, 1).unwrap();
        let r = solve(&obj, &Domain::Unconstrained, &pv(&[0.3]), &SolverConfig::default()).unwrap();
        assert!(r.iters_used <= 1000);
        assert!(obj.value(&r.solution).unwrap() <= 0.3);
    }

    #[test]
    fn prox_step_limits() {
        let dom = Domain::Unconstrained;
        let (w, a) = (pv(&[2.0]), pv(&[0.0]));
        assert_eq!(prox_step(&w, &a, 1.0, 1.0, &dom).unwrap(), pv(&[1.0]));
        assert!((prox_step(&w, &a, 1e-14, 1.0, &dom).unwrap()[0] - 2.0).abs() < 1e-12);
        assert!(prox_step(&w, &a, 1e14, 1.0, &dom).unwrap()[0].abs() < 1e-12);
        assert!(prox_step(&w, &a, 0.0, 1.0, &dom).is_err());
    }

    #[test]
    fn prox_step_first_order_optimality() {
        let dom = Domain::Unconstrained;
        for (w, a, s, e) in [(3.0, -1.0, 0.2, 0.7), (-5.0, 2.0, 3.0, 0.1), (0.5, 0.5, 1.0, 9.0)] {
            let u = prox_step(&pv(&[w]), &pv(&[a]), s, e, &dom).unwrap()[0];
            let residual = (u - w) / s + (u - a) / e;
            assert!(residual.abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { armijo_c: 1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { backtrack_factor: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { max_iters: 0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { grad_tol: -1.0, ..Default::default() }.validate().is_err());
    }
}
