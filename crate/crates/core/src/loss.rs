//! Per-round losses for linear policies.
//!
//! A [`RoundLoss`] is either an empirical divergence over a batch of
//! `(feature, target)` samples, or a linear surrogate produced by
//! [`RoundLoss::linearize`]. Sample losses are averaged over the batch:
//!
//! ```text
//! l(W) = (weight / n) * sum_i s_i * phi(W x_i, y_i)
//! ```
//!
//! where `s_i` are optional per-sample weights (all one by default).

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::param::{self, ParamVector};
use crate::solvers::{self, Objective, SolverConfig};

/// Penalty applied to each sample's prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    /// `0.5 * |z - y|^2`
    Squared,
    /// `|z - y|_1`
    Absolute,
    /// Cross-entropy of `softmax(z)` against the target distribution.
    Logistic,
    /// Coordinate-wise Huber with threshold `delta`.
    Huber { delta: f64 },
}

impl LossKind {
    pub const DEFAULT_HUBER_DELTA: f64 = 1.0;

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Squared => "l2",
            LossKind::Absolute => "l1",
            LossKind::Logistic => "logistic",
            LossKind::Huber { .. } => "huber",
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, LossKind::Absolute)
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" | "squared" => Ok(LossKind::Squared),
            "l1" | "absolute" => Ok(LossKind::Absolute),
            "logistic" | "ce" => Ok(LossKind::Logistic),
            "huber" => Ok(LossKind::Huber { delta: Self::DEFAULT_HUBER_DELTA }),
            other => Err(Error::Config(format!("unknown loss kind `{other}`"))),
        }
    }
}

/// Problem constants of a loss. `None` means the constant does not exist
/// (or is not available) for this loss on the given domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossMeta {
    pub smoothness_l: Option<f64>,
    pub strong_convexity_mu: f64,
    pub lipschitz_g: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Penalty {
    Squared,
    Absolute,
    Logistic,
    Huber(f64),
    /// `huber_delta(r) / delta`, a smooth under-approximation of `|r|`
    /// within `delta / 2`.
    SmoothAbs(f64),
}

impl Penalty {
    fn from_kind(kind: LossKind) -> Self {
        match kind {
            LossKind::Squared => Penalty::Squared,
            LossKind::Absolute => Penalty::Absolute,
            LossKind::Logistic => Penalty::Logistic,
            LossKind::Huber { delta } => Penalty::Huber(delta),
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Penalty::Squared => 0,
            Penalty::Absolute => 1,
            Penalty::Logistic => 2,
            Penalty::Huber(d) => 3 ^ d.to_bits().rotate_left(3),
            Penalty::SmoothAbs(d) => 4 ^ d.to_bits().rotate_left(5),
        }
    }

    /// Writes `d phi / d z` into `dz` and returns `phi(z, y)`.
    fn eval(&self, z: &[f64], y: &[f64], dz: Option<&mut [f64]>) -> f64 {
        match *self {
            Penalty::Squared => {
                let mut v = 0.0;
                match dz {
                    Some(dz) => {
                        for k in 0..z.len() {
                            let r = z[k] - y[k];
                            dz[k] = r;
                            v += r * r;
                        }
                    }
                    None => {
                        for k in 0..z.len() {
                            let r = z[k] - y[k];
                            v += r * r;
                        }
                    }
                }
                0.5 * v
            }
            Penalty::Absolute => {
                let mut v = 0.0;
                let mut dz = dz;
                for k in 0..z.len() {
                    let r = z[k] - y[k];
                    v += r.abs();
                    if let Some(dz) = dz.as_deref_mut() {
                        // sign(0) = 0 at the kink
                        dz[k] = if r > 0.0 {
                            1.0
                        } else if r < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                    }
                }
                v
            }
            Penalty::Huber(delta) | Penalty::SmoothAbs(delta) => {
                let scale = if matches!(self, Penalty::SmoothAbs(_)) { 1.0 / delta } else { 1.0 };
                let mut v = 0.0;
                let mut dz = dz;
                for k in 0..z.len() {
                    let r = z[k] - y[k];
                    if r.abs() <= delta {
                        v += 0.5 * r * r;
                    } else {
                        v += delta * (r.abs() - 0.5 * delta);
                    }
                    if let Some(dz) = dz.as_deref_mut() {
                        dz[k] = scale * r.clamp(-delta, delta);
                    }
                }
                scale * v
            }
            Penalty::Logistic => {
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum_exp: f64 = z.iter().map(|zk| (zk - max).exp()).sum();
                let lse = max + sum_exp.ln();
                let mass: f64 = y.iter().sum();
                let v = lse * mass - param::dot(y, z);
                if let Some(dz) = dz {
                    for k in 0..z.len() {
                        dz[k] = mass * (z[k] - lse).exp() - y[k];
                    }
                }
                // cross-entropy against a distribution is >= 0; clamp rounding noise
                v.max(0.0)
            }
        }
    }
}

/// Rows of a sample loss in evaluation-ready form: each row carries its
/// effective weight `omega_i = weight * s_i / n` and a sparse view of its
/// features.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct WeightedRows {
    pub(crate) penalty: Penalty,
    pub(crate) d_feature: usize,
    pub(crate) d_output: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    targets: Vec<f64>,
    omega: Vec<f64>,
}

impl WeightedRows {
    fn empty(penalty: Penalty, d_feature: usize, d_output: usize) -> Self {
        Self {
            penalty,
            d_feature,
            d_output,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
            targets: Vec::new(),
            omega: Vec::new(),
        }
    }

    fn push_row(&mut self, x: &[f64], y: &[f64], omega: f64) {
        for (j, &v) in x.iter().enumerate() {
            if v != 0.0 {
                self.indices.push(j);
                self.values.push(v);
            }
        }
        self.indptr.push(self.indices.len());
        self.targets.extend_from_slice(y);
        self.omega.push(omega);
    }

    pub(crate) fn n_rows(&self) -> usize {
        self.omega.len()
    }

    fn row(&self, i: usize) -> (&[usize], &[f64], &[f64], f64) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        let y = &self.targets[i * self.d_output..(i + 1) * self.d_output];
        (&self.indices[a..b], &self.values[a..b], y, self.omega[i])
    }

    pub(crate) fn with_penalty(&self, penalty: Penalty) -> Self {
        Self { penalty, ..self.clone() }
    }

    /// Adds `sum_i omega_i phi_i` to the return value and its gradient into `grad`.
    pub(crate) fn accumulate(&self, w: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let (df, dout) = (self.d_feature, self.d_output);
        let mut z = vec![0.0; dout];
        let mut dz = vec![0.0; dout];
        let mut total = 0.0;
        let mut grad = grad;
        for i in 0..self.n_rows() {
            let (idx, vals, y, omega) = self.row(i);
            for (o, zo) in z.iter_mut().enumerate() {
                let base = o * df;
                *zo = idx.iter().zip(vals).map(|(&j, &v)| w[base + j] * v).sum();
            }
            match grad.as_deref_mut() {
                Some(g) => {
                    total += omega * self.penalty.eval(&z, y, Some(&mut dz));
                    for (o, &d) in dz.iter().enumerate() {
                        let coef = omega * d;
                        if coef != 0.0 {
                            let base = o * df;
                            for (&j, &v) in idx.iter().zip(vals) {
                                g[base + j] += coef * v;
                            }
                        }
                    }
                }
                None => total += omega * self.penalty.eval(&z, y, None),
            }
        }
        total
    }

    /// `sum_i omega_i x_i x_i^T`
    fn gram(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.d_feature, self.d_feature);
        for i in 0..self.n_rows() {
            let (idx, vals, _, omega) = self.row(i);
            for (&a, &va) in idx.iter().zip(vals) {
                for (&b, &vb) in idx.iter().zip(vals) {
                    m[(a, b)] += omega * va * vb;
                }
            }
        }
        m
    }

    fn row_norms(&self) -> impl Iterator<Item = (f64, &[f64], f64)> + '_ {
        (0..self.n_rows()).map(move |i| {
            let (_, vals, y, omega) = self.row(i);
            (param::norm(vals), y, omega)
        })
    }
}

/// Merges many sample losses into one pool per penalty, summing the weights
/// of bit-identical `(x, y)` rows. Linear losses collapse into one slope.
#[derive(Debug, Clone)]
pub(crate) struct Pool {
    pub(crate) groups: Vec<WeightedRows>,
    pub(crate) slope: Option<Vec<f64>>,
}

impl Pool {
    pub(crate) fn build(losses: &[RoundLoss], dim: usize) -> Result<Self> {
        let mut groups: Vec<WeightedRows> = Vec::new();
        let mut index: HashMap<(usize, Vec<u64>), usize> = HashMap::new();
        let mut slope: Option<Vec<f64>> = None;
        let mut xbuf = Vec::new();
        for loss in losses {
            if loss.dim() != dim {
                return Err(Error::Shape(format!("loss expects dimension {}, objective has {dim}", loss.dim())));
            }
            match &loss.body {
                Body::Linear { slope: s } => {
                    let acc = slope.get_or_insert_with(|| vec![0.0; dim]);
                    param::axpy(loss.weight, s.as_slice(), acc);
                }
                Body::Samples(rows) => {
                    let gi = match groups.iter().position(|g| {
                        g.penalty.tag() == rows.penalty.tag()
                            && g.d_feature == rows.d_feature
                            && g.d_output == rows.d_output
                    }) {
                        Some(gi) => gi,
                        None => {
                            groups.push(WeightedRows::empty(rows.penalty, rows.d_feature, rows.d_output));
                            groups.len() - 1
                        }
                    };
                    for i in 0..rows.n_rows() {
                        let (idx, vals, y, omega) = rows.row(i);
                        xbuf.clear();
                        xbuf.resize(rows.d_feature, 0.0);
                        for (&j, &v) in idx.iter().zip(vals) {
                            xbuf[j] = v;
                        }
                        let key: Vec<u64> = xbuf.iter().chain(y).map(|v| v.to_bits()).collect();
                        match index.get(&(gi, key.clone())) {
                            Some(&r) => groups[gi].omega[r] += omega,
                            None => {
                                index.insert((gi, key), groups[gi].n_rows());
                                groups[gi].push_row(&xbuf, y, omega);
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { groups, slope })
    }

    pub(crate) fn accumulate(&self, w: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut total = 0.0;
        let mut grad = grad;
        for g in &self.groups {
            total += g.accumulate(w, grad.as_deref_mut());
        }
        if let Some(s) = &self.slope {
            total += param::dot(s, w);
            if let Some(g) = grad {
                param::axpy(1.0, s, g);
            }
        }
        total
    }

    pub(crate) fn has_absolute(&self) -> bool {
        self.groups.iter().any(|g| g.penalty == Penalty::Absolute)
    }

    pub(crate) fn smoothed(&self, delta: f64) -> Self {
        Self {
            groups: self
                .groups
                .iter()
                .map(|g| match g.penalty {
                    Penalty::Absolute => g.with_penalty(Penalty::SmoothAbs(delta)),
                    _ => g.clone(),
                })
                .collect(),
            slope: self.slope.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Body {
    Samples(WeightedRows),
    Linear { slope: ParamVector },
}

/// One round's loss `l_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLoss {
    body: Body,
    weight: f64,
    kind: Option<LossKind>,
    features: Vec<f64>,
    targets: Vec<f64>,
    sample_weights: Option<Vec<f64>>,
    n_samples: usize,
    d_feature: usize,
    d_output: usize,
}

impl RoundLoss {
    /// Builds a sample loss from row-major `features` (`n x d_feature`) and
    /// `targets` (`n x d_output`).
    pub fn new(
        features: Vec<f64>,
        targets: Vec<f64>,
        n_samples: usize,
        d_feature: usize,
        d_output: usize,
        kind: LossKind,
    ) -> Result<Self> {
        if n_samples == 0 || d_feature == 0 || d_output == 0 {
            return Err(Error::Shape("loss needs at least one sample and positive dimensions".into()));
        }
        if features.len() != n_samples * d_feature {
            return Err(Error::Shape(format!(
                "features: expected {} entries, got {}",
                n_samples * d_feature,
                features.len()
            )));
        }
        if targets.len() != n_samples * d_output {
            return Err(Error::Shape(format!(
                "targets: expected {} entries, got {}",
                n_samples * d_output,
                targets.len()
            )));
        }
        if features.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("loss data".into()));
        }
        match kind {
            LossKind::Huber { delta } if !(delta > 0.0 && delta.is_finite()) => {
                return Err(Error::Config(format!("huber delta must be positive, got {delta}")));
            }
            LossKind::Logistic if targets.iter().any(|&y| y < 0.0) => {
                return Err(Error::Config("logistic targets must be nonnegative".into()));
            }
            _ => {}
        }
        let mut loss = Self {
            body: Body::Linear { slope: ParamVector::zeros(1) },
            weight: 1.0,
            kind: Some(kind),
            features,
            targets,
            sample_weights: None,
            n_samples,
            d_feature,
            d_output,
        };
        loss.rebuild();
        Ok(loss)
    }

    /// Linear loss `<slope, w>`; its gradient is `slope` everywhere.
    pub fn linear(slope: ParamVector) -> Self {
        let dim = slope.dim();
        Self {
            body: Body::Linear { slope },
            weight: 1.0,
            kind: None,
            features: Vec::new(),
            targets: Vec::new(),
            sample_weights: None,
            n_samples: 0,
            d_feature: dim,
            d_output: 1,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::Config(format!("loss weight must be positive, got {weight}")));
        }
        self.weight = weight;
        self.rebuild();
        Ok(self)
    }

    /// Per-sample weights `s_i` (nonnegative, finite). The average is still
    /// taken over `n`.
    pub fn with_sample_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if self.kind.is_none() {
            return Err(Error::Config("linear losses have no samples".into()));
        }
        if weights.len() != self.n_samples {
            return Err(Error::Shape("one weight per sample".into()));
        }
        if weights.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config("sample weights must be finite and nonnegative".into()));
        }
        self.sample_weights = Some(weights);
        self.rebuild();
        Ok(self)
    }

    fn rebuild(&mut self) {
        let Some(kind) = self.kind else { return };
        let mut rows = WeightedRows::empty(Penalty::from_kind(kind), self.d_feature, self.d_output);
        let n = self.n_samples as f64;
        for i in 0..self.n_samples {
            let s = self.sample_weights.as_ref().map_or(1.0, |sw| sw[i]);
            rows.push_row(
                &self.features[i * self.d_feature..(i + 1) * self.d_feature],
                &self.targets[i * self.d_output..(i + 1) * self.d_output],
                self.weight * s / n,
            );
        }
        self.body = Body::Samples(rows);
    }

    /// Parameter dimension `d_feature * d_output`.
    pub fn dim(&self) -> usize {
        match &self.body {
            Body::Linear { slope } => slope.dim(),
            Body::Samples(_) => self.d_feature * self.d_output,
        }
    }

    /// `None` for linear losses.
    pub fn kind(&self) -> Option<LossKind> {
        self.kind
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.body, Body::Linear { .. })
    }

    /// False only for linear losses, which may take negative values.
    pub fn is_nonnegative(&self) -> bool {
        !self.is_linear()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn d_feature(&self) -> usize {
        self.d_feature
    }

    pub fn d_output(&self) -> usize {
        self.d_output
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn slope(&self) -> Option<&ParamVector> {
        match &self.body {
            Body::Linear { slope } => Some(slope),
            Body::Samples(_) => None,
        }
    }

    fn check(&self, w: &ParamVector) -> Result<()> {
        w.check_dim(self.dim(), "loss argument")
    }

    pub(crate) fn eval_raw(&self, w: &[f64], grad: Option<&mut [f64]>) -> f64 {
        match &self.body {
            Body::Samples(rows) => rows.accumulate(w, grad),
            Body::Linear { slope } => {
                if let Some(g) = grad {
                    param::axpy(self.weight, slope.as_slice(), g);
                }
                self.weight * slope.dot_slice(w)
            }
        }
    }

    pub fn value(&self, w: &ParamVector) -> Result<f64> {
        self.check(w)?;
        let v = self.eval_raw(w.as_slice(), None);
        finite(v, "loss value")
    }

    /// Gradient, or the `sign(0) = 0` subgradient for absolute losses.
    pub fn gradient(&self, w: &ParamVector) -> Result<ParamVector> {
        Ok(self.value_and_gradient(w)?.1)
    }

    pub fn value_and_gradient(&self, w: &ParamVector) -> Result<(f64, ParamVector)> {
        self.check(w)?;
        let mut g = vec![0.0; self.dim()];
        let v = self.eval_raw(w.as_slice(), Some(&mut g));
        let v = finite(v, "loss value")?;
        Ok((v, ParamVector::new(g)?))
    }

    /// First-order surrogate `<grad l(anchor), w>`.
    pub fn linearize(&self, anchor: &ParamVector) -> Result<RoundLoss> {
        Ok(RoundLoss::linear(self.gradient(anchor)?))
    }

    /// Analytic problem constants. The Lipschitz constant of squared losses
    /// only exists on a bounded domain.
    pub fn meta(&self, dom: &Domain) -> LossMeta {
        let rows = match &self.body {
            Body::Linear { slope } => {
                return LossMeta {
                    smoothness_l: Some(0.0),
                    strong_convexity_mu: 0.0,
                    lipschitz_g: Some(self.weight * slope.norm()),
                }
            }
            Body::Samples(rows) => rows,
        };
        let (lmax, lmin) = extreme_eigenvalues(&rows.gram());
        let sqrt_k = (rows.d_output as f64).sqrt();
        match rows.penalty {
            Penalty::Squared => {
                let lipschitz_g = dom.enclosing_ball().map(|(c, r)| {
                    let c = ParamVector::new(if c.len() == self.dim() { c } else { vec![0.0; self.dim()] })
                        .expect("finite center");
                    let g0 = self.gradient(&c).map(|g| g.norm()).unwrap_or(f64::INFINITY);
                    g0 + lmax * r
                });
                LossMeta { smoothness_l: Some(lmax), strong_convexity_mu: lmin.max(0.0), lipschitz_g }
            }
            Penalty::Huber(delta) => LossMeta {
                smoothness_l: Some(lmax),
                strong_convexity_mu: 0.0,
                lipschitz_g: Some(rows.row_norms().map(|(nx, _, om)| om * delta * sqrt_k * nx).sum()),
            },
            Penalty::Absolute => LossMeta {
                smoothness_l: None,
                strong_convexity_mu: 0.0,
                lipschitz_g: Some(rows.row_norms().map(|(nx, _, om)| om * sqrt_k * nx).sum()),
            },
            Penalty::SmoothAbs(delta) => LossMeta {
                smoothness_l: Some(lmax / delta),
                strong_convexity_mu: 0.0,
                lipschitz_g: Some(rows.row_norms().map(|(nx, _, om)| om * sqrt_k * nx).sum()),
            },
            Penalty::Logistic => {
                // softmax cross-entropy Hessian in z is mass * (diag(p) - p p^T) <= mass / 2
                let mass_max = (0..rows.n_rows()).map(|i| rows.row(i).2.iter().sum::<f64>()).fold(0.0, f64::max);
                LossMeta {
                    smoothness_l: Some(0.5 * mass_max * lmax),
                    strong_convexity_mu: 0.0,
                    lipschitz_g: Some(
                        rows.row_norms()
                            .map(|(nx, y, om)| {
                                let mass: f64 = y.iter().sum();
                                om * (mass * mass + param::dot(y, y)).sqrt() * nx
                            })
                            .sum(),
                    ),
                }
            }
        }
    }

    /// Minimizer of this single loss over `dom` and its value.
    ///
    /// Squared losses on an unconstrained domain use the closed-form
    /// minimum-norm least-squares solution; everything else goes through the
    /// high-accuracy minimizer with gradient tolerance `1e-10`.
    pub fn exact_min(&self, dom: &Domain) -> Result<ExactMin> {
        if let (Body::Samples(rows), Domain::Unconstrained) = (&self.body, dom) {
            if rows.penalty == Penalty::Squared {
                let w = least_squares(rows)?;
                let value = self.value(&w)?;
                return Ok(ExactMin { point: w, value, converged: true, grad_norm: 0.0 });
            }
        }
        let cfg = SolverConfig { grad_tol: 1e-10, ..SolverConfig::default() };
        let objective = Objective::new(std::slice::from_ref(self), self.dim())?;
        let start = dom.project(&ParamVector::zeros(self.dim()));
        let report = solvers::minimize_accurately(&objective, dom, &start, &cfg)?;
        Ok(ExactMin {
            value: report.objective_value,
            converged: report.converged,
            grad_norm: report.final_grad_norm,
            point: report.solution,
        })
    }
}

/// Result of [`RoundLoss::exact_min`]. Non-convergence is reported, not
/// raised: losses such as logistic on separable data have no attained
/// minimizer, and their best point is still useful.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMin {
    pub point: ParamVector,
    pub value: f64,
    pub converged: bool,
    pub grad_norm: f64,
}

impl ParamVector {
    pub(crate) fn dot_slice(&self, w: &[f64]) -> f64 {
        param::dot(self.as_slice(), w)
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

pub(crate) fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

/// Minimum-norm minimizer of a sum of squared losses, or `None` when the
/// losses are not all squared sample losses.
pub(crate) fn pooled_least_squares(losses: &[RoundLoss], dim: usize) -> Option<Result<ParamVector>> {
    let pool = match Pool::build(losses, dim) {
        Ok(p) => p,
        Err(e) => return Some(Err(e)),
    };
    match (pool.groups.as_slice(), &pool.slope) {
        ([g], None) if g.penalty == Penalty::Squared => Some(least_squares(g)),
        _ => None,
    }
}

/// Minimum-norm weighted least squares, one output row at a time.
fn least_squares(rows: &WeightedRows) -> Result<ParamVector> {
    let (n, df, dout) = (rows.n_rows(), rows.d_feature, rows.d_output);
    let mut a = DMatrix::zeros(n, df);
    let mut b = DMatrix::zeros(n, dout);
    for i in 0..n {
        let (idx, vals, y, omega) = rows.row(i);
        let s = omega.sqrt();
        for (&j, &v) in idx.iter().zip(vals) {
            a[(i, j)] = s * v;
        }
        for o in 0..dout {
            b[(i, o)] = s * y[o];
        }
    }
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = max_sv * (n.max(df) as f64) * f64::EPSILON;
    let x = svd.solve(&b, eps).map_err(|e| Error::Shape(format!("least squares failed: {e}")))?;
    let mut w = vec![0.0; dout * df];
    for o in 0..dout {
        let col: DVector<f64> = x.column(o).into_owned();
        w[o * df..(o + 1) * df].copy_from_slice(col.as_slice());
    }
    ParamVector::new(w)
}
