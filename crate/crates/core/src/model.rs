//! Network domain types, the closed-form mobility model and coordinate
//! normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Half-extent assigned to a degenerate (single point) domain.
pub const EPS_BOX: f64 = 1e-9;

/// A point in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point<S> {
    pub coords: Vec<S>,
}

impl<S: Scalar> Point<S> {
    pub fn new(coords: Vec<S>) -> Self {
        Point { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Point { coords: vec![S::zero(); dim] }
    }

    pub fn from_f64(coords: &[f64]) -> Self {
        Point { coords: coords.iter().map(|&c| S::lit(c)).collect() }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    #[inline]
    pub fn sq_dist(&self, other: &Point<S>) -> S {
        sq_dist(&self.coords, &other.coords)
    }

    pub fn dist(&self, other: &Point<S>) -> S {
        self.sq_dist(other).sqrt()
    }

    pub fn cast<T: Scalar>(&self) -> Point<T> {
        Point { coords: self.coords.iter().map(|c| T::lit(c.as_f64())).collect() }
    }
}

impl<S> AsRef<[S]> for Point<S> {
    fn as_ref(&self) -> &[S] {
        &self.coords
    }
}

#[inline]
pub(crate) fn sq_dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&p, &q)| {
        let d = p - q;
        acc + d * d
    })
}

#[inline]
pub(crate) fn sq_norm<S: Scalar>(a: &[S]) -> S {
    a.iter().fold(S::zero(), |acc, &v| acc + v * v)
}

/// Snapshot of node and controller positions at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState<S> {
    pub t: S,
    pub nodes: Vec<Point<S>>,
    pub controllers: Vec<Point<S>>,
}

impl<S: Scalar> NetworkState<S> {
    pub fn new(t: S, nodes: Vec<Point<S>>, controllers: Vec<Point<S>>) -> Result<Self> {
        let state = NetworkState { t, nodes, controllers };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let m = self.controllers.len();
        if m == 0 {
            return Err(Error::config("at least one controller is required"));
        }
        if n < m {
            return Err(Error::config(format!("node count ({n}) must be at least the controller count ({m})")));
        }
        let dim = self.nodes[0].dim();
        if dim == 0 {
            return Err(Error::config("dimension must be at least 1"));
        }
        for p in self.nodes.iter().chain(&self.controllers) {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
            if !p.is_finite() {
                return Err(Error::NonFinite("network state".into()));
            }
        }
        if !self.t.is_finite() {
            return Err(Error::NonFinite("network time".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn num_controllers(&self) -> usize {
        self.controllers.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.nodes[0].dim()
    }
}

/// Straight-line exponential approach of one node from `start` to `end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMotion<S> {
    pub start: Point<S>,
    pub end: Point<S>,
    pub rate: S,
}

impl<S: Scalar> NodeMotion<S> {
    /// `x(t) = (start - end) * exp(-rate * t) + end`
    pub fn position_into(&self, t: S, out: &mut [S]) {
        let decay = (-self.rate * t).exp();
        for ((o, &s), &e) in out.iter_mut().zip(&self.start.coords).zip(&self.end.coords) {
            *o = (s - e) * decay + e;
        }
    }

    /// Analytic derivative of [`position_into`](Self::position_into).
    pub fn velocity_into(&self, t: S, out: &mut [S]) {
        let decay = (-self.rate * t).exp();
        for ((o, &s), &e) in out.iter_mut().zip(&self.start.coords).zip(&self.end.coords) {
            *o = -self.rate * (s - e) * decay;
        }
    }
}

/// Per-node trajectories in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilitySpec<S> {
    motions: Vec<NodeMotion<S>>,
}

impl<S: Scalar> MobilitySpec<S> {
    pub fn new(motions: Vec<NodeMotion<S>>) -> Result<Self> {
        let Some(first) = motions.first() else {
            return Err(Error::config("mobility spec has no nodes"));
        };
        let dim = first.start.dim();
        if dim == 0 {
            return Err(Error::config("dimension must be at least 1"));
        }
        for (i, m) in motions.iter().enumerate() {
            if m.start.dim() != dim || m.end.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.start.dim().max(m.end.dim()) });
            }
            if !(m.rate > S::zero()) || !m.rate.is_finite() {
                return Err(Error::config(format!("node {i}: rate must be positive and finite")));
            }
            if !m.start.is_finite() || !m.end.is_finite() {
                return Err(Error::config(format!("node {i}: non-finite start or end point")));
            }
        }
        Ok(MobilitySpec { motions })
    }

    /// Every node parked at `points` forever.
    pub fn stationary(points: &[Point<S>]) -> Result<Self> {
        Self::new(points.iter().map(|p| NodeMotion { start: p.clone(), end: p.clone(), rate: S::one() }).collect())
    }

    pub fn motions(&self) -> &[NodeMotion<S>] {
        &self.motions
    }

    pub fn len(&self) -> usize {
        self.motions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.motions[0].start.dim()
    }

    pub fn is_within(&self, domain: &DomainBox<S>) -> bool {
        self.motions.iter().all(|m| domain.contains(&m.start) && domain.contains(&m.end))
    }

    /// Writes `x_i(t)` for every node into `out`, which must hold one point per node.
    pub fn positions_into(&self, t: S, out: &mut [Point<S>]) {
        for (m, p) in self.motions.iter().zip(out) {
            m.position_into(t, &mut p.coords);
        }
    }

    pub fn velocities_into(&self, t: S, out: &mut [Point<S>]) {
        for (m, v) in self.motions.iter().zip(out) {
            m.velocity_into(t, &mut v.coords);
        }
    }
}

/// Node positions at time `t >= 0`, evaluated exactly.
pub fn node_positions<S: Scalar>(spec: &MobilitySpec<S>, t: S) -> Vec<Point<S>> {
    let mut out = vec![Point::origin(spec.dim()); spec.len()];
    spec.positions_into(t, &mut out);
    out
}

/// Node velocities `phi_i(t) = -k_i (x_i(t) - x_end,i)`.
pub fn node_velocities<S: Scalar>(spec: &MobilitySpec<S>, t: S) -> Vec<Point<S>> {
    let mut out = vec![Point::origin(spec.dim()); spec.len()];
    spec.velocities_into(t, &mut out);
    out
}

/// Axis-aligned box described by its center and the largest per-axis half extent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox<S> {
    pub center: Point<S>,
    pub half_extent: S,
}

impl<S: Scalar> DomainBox<S> {
    pub fn new(center: Point<S>, half_extent: S) -> Result<Self> {
        if !(half_extent > S::zero()) || !half_extent.is_finite() {
            return Err(Error::config("half extent must be positive and finite"));
        }
        Ok(DomainBox { center, half_extent })
    }

    pub fn contains(&self, p: &Point<S>) -> bool {
        p.coords.iter().zip(&self.center.coords).all(|(&c, &mu)| (c - mu).abs() <= self.half_extent)
    }

    pub fn normalize(&self, p: &Point<S>) -> Point<S> {
        normalize(self, p)
    }

    pub fn denormalize(&self, p: &Point<S>) -> Point<S> {
        denormalize(self, p)
    }
}

/// Fits the bounding box of `points`: midpoint center, largest half side as scale.
pub fn fit_domain<'a, S: Scalar>(points: impl IntoIterator<Item = &'a Point<S>>) -> Result<DomainBox<S>> {
    let mut iter = points.into_iter();
    let first = iter.next().ok_or(Error::EmptyPointSet)?;
    if !first.is_finite() {
        return Err(Error::NonFinite("domain points".into()));
    }
    let mut lo = first.coords.clone();
    let mut hi = first.coords.clone();
    for p in iter {
        if p.dim() != lo.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: p.dim() });
        }
        if !p.is_finite() {
            return Err(Error::NonFinite("domain points".into()));
        }
        for ((l, h), &c) in lo.iter_mut().zip(hi.iter_mut()).zip(&p.coords) {
            *l = l.min(c);
            *h = h.max(c);
        }
    }
    let two = S::lit(2.0);
    let center = lo.iter().zip(&hi).map(|(&l, &h)| l + (h - l) / two).collect();
    let half = lo.iter().zip(&hi).fold(S::zero(), |acc, (&l, &h)| acc.max((h - l) / two)).max(S::lit(EPS_BOX));
    Ok(DomainBox { center: Point::new(center), half_extent: half })
}

/// `(p - center) / half_extent`
pub fn normalize<S: Scalar>(domain: &DomainBox<S>, p: &Point<S>) -> Point<S> {
    Point::new(p.coords.iter().zip(&domain.center.coords).map(|(&c, &mu)| (c - mu) / domain.half_extent).collect())
}

pub fn denormalize<S: Scalar>(domain: &DomainBox<S>, p: &Point<S>) -> Point<S> {
    Point::new(p.coords.iter().zip(&domain.center.coords).map(|(&c, &mu)| c * domain.half_extent + mu).collect())
}
