use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::ParamVector;

/// Feasible parameter set `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Unconstrained,
    Ball { center: ParamVector, radius: f64 },
    Box { lo: ParamVector, hi: ParamVector },
}

impl Domain {
    pub fn ball(center: ParamVector, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("ball radius must be finite and >= 0, got {radius}")));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn centered_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::ball(ParamVector::zeros(dim), radius)
    }

    pub fn new_box(lo: ParamVector, hi: ParamVector) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::Shape("box bounds have different dimensions".into()));
        }
        if lo.as_slice().iter().zip(hi.as_slice()).any(|(l, h)| l > h) {
            return Err(Error::Config("box lower bound exceeds upper bound".into()));
        }
        Ok(Domain::Box { lo, hi })
    }

    /// Euclidean diameter, `+inf` when unbounded.
    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Unconstrained => f64::INFINITY,
            Domain::Ball { radius, .. } => 2.0 * radius,
            Domain::Box { lo, hi } => lo.distance(hi),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Domain::Unconstrained)
    }

    /// Dimension the domain is defined for, if it pins one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Domain::Unconstrained => None,
            Domain::Ball { center, .. } => Some(center.dim()),
            Domain::Box { lo, .. } => Some(lo.dim()),
        }
    }

    /// A point and radius whose ball contains the domain.
    pub(crate) fn enclosing_ball(&self) -> Option<(Vec<f64>, f64)> {
        match self {
            Domain::Unconstrained => None,
            Domain::Ball { center, radius } => Some((center.as_slice().to_vec(), *radius)),
            Domain::Box { lo, hi } => {
                let mid = lo.as_slice().iter().zip(hi.as_slice()).map(|(l, h)| 0.5 * (l + h)).collect();
                Some((mid, 0.5 * lo.distance(hi)))
            }
        }
    }

    pub fn check_compatible(&self, dim: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != dim => Err(Error::Shape(format!("domain has dimension {d}, parameter has {dim}"))),
            _ => Ok(()),
        }
    }

    /// Euclidean projection onto the domain.
    pub fn project(&self, w: &ParamVector) -> ParamVector {
        let mut v = w.as_slice().to_vec();
        self.project_in_place(&mut v);
        ParamVector::new(v).expect("projection of a finite point is finite")
    }

    pub(crate) fn project_in_place(&self, w: &mut [f64]) {
        match self {
            Domain::Unconstrained => {}
            Domain::Ball { center, radius } => {
                let c = center.as_slice();
                let mut dist = crate::param::distance(w, c);
                let mut shrink = 1.0;
                // Rounding in the radial shrink can leave the point a hair outside.
                while dist > *radius {
                    let scale = if dist > 0.0 { shrink * radius / dist } else { 0.0 };
                    for (wi, ci) in w.iter_mut().zip(c) {
                        *wi = ci + (*wi - ci) * scale;
                    }
                    dist = crate::param::distance(w, c);
                    shrink *= 1.0 - f64::EPSILON;
                }
            }
            Domain::Box { lo, hi } => {
                for ((wi, l), h) in w.iter_mut().zip(lo.as_slice()).zip(hi.as_slice()) {
                    *wi = wi.clamp(*l, *h);
                }
            }
        }
    }

    /// Distance from `w` to the domain (zero for feasible points).
    pub fn distance_to(&self, w: &ParamVector) -> f64 {
        w.distance(&self.project(w))
    }
}
