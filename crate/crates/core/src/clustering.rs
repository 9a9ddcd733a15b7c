//! Static maximum-entropy clustering: distortion, Gibbs association weights,
//! posteriors and cluster masses, the coupled-centroid (Theta) system and the
//! free-energy objective.
//!
//! Distances are squared Euclidean throughout. The distortion between node
//! `x_i` and controller `y_j` is `|x_i - y_j|^2 + gamma * sum_j' |y_j - y_j'|^2`,
//! so the Gibbs step minimizes the same free energy that [`free_energy`] reports.

use crate::error::{Error, Result};
use crate::model::{sq_dist, NetworkState, Point};
use crate::scalar::Scalar;

/// Lower bound applied to every cluster mass before renormalization.
pub const EPS_MASS: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn column_sums(&self) -> Vec<S> {
        let mut sums = vec![S::zero(); self.cols];
        for row in self.iter_rows() {
            for (s, &v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }
}

/// Row-stochastic `N x M` matrix of weights `p(y_j | x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMatrix<S>(pub(crate) Matrix<S>);

impl<S: Scalar> AssociationMatrix<S> {
    /// Wraps `m` after checking that it is nonnegative and row-stochastic.
    pub fn new(m: Matrix<S>) -> Result<Self> {
        let tol = S::lit(1e-9);
        for (i, row) in m.iter_rows().enumerate() {
            if row.iter().any(|&v| !(v >= S::zero()) || !v.is_finite()) {
                return Err(Error::config(format!("association row {i} has invalid entries")));
            }
            let s: S = row.iter().copied().sum();
            if (s - S::one()).abs() > tol {
                return Err(Error::config(format!("association row {i} sums to {s}")));
            }
        }
        Ok(AssociationMatrix(m))
    }

    pub fn uniform(n: usize, m: usize) -> Self {
        let w = S::one() / S::from_usize_lossy(m);
        AssociationMatrix(Matrix { rows: n, cols: m, data: vec![w; n * m] })
    }

    /// Every node fully assigned to `labels[i]`.
    pub fn hard(labels: &[usize], m: usize) -> Self {
        let mut mat = Matrix::zeros(labels.len(), m);
        for (i, &l) in labels.iter().enumerate() {
            mat.row_mut(i)[l] = S::one();
        }
        AssociationMatrix(mat)
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.0
    }

    pub fn num_nodes(&self) -> usize {
        self.0.rows
    }

    pub fn num_controllers(&self) -> usize {
        self.0.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.0.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[S] {
        self.0.row(i)
    }

    /// Index of the largest weight in each row (first one on ties).
    pub fn argmax(&self) -> Vec<usize> {
        self.0.iter_rows().map(argmax).collect()
    }
}

/// Column-stochastic `N x M` matrix of posteriors `p(x_i | y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix<S>(pub(crate) Matrix<S>);

impl<S: Scalar> PosteriorMatrix<S> {
    pub fn matrix(&self) -> &Matrix<S> {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.0.get(i, j)
    }
}

/// Cluster masses `p(y_j)`, floored at [`EPS_MASS`] and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMasses<S>(pub(crate) Vec<S>);

impl<S: Scalar> ClusterMasses<S> {
    /// Floors `raw` at [`EPS_MASS`] and renormalizes.
    pub fn from_raw(raw: &[S]) -> Self {
        let floor = S::lit(EPS_MASS);
        let mut m: Vec<S> = raw.iter().map(|&v| v.max(floor)).collect();
        let total: S = m.iter().copied().sum();
        for v in &mut m {
            *v /= total;
        }
        ClusterMasses(m)
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }
}

/// Terms of the free energy `F = D1 + gamma * D2 - T * H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown<S> {
    pub delay: S,
    pub sync: S,
    pub entropy: S,
    pub free_energy: S,
    pub temperature: S,
    pub gamma: S,
}

impl<S: Scalar> CostBreakdown<S> {
    pub fn new(delay: S, sync: S, entropy: S, temperature: S, gamma: S) -> Self {
        CostBreakdown {
            delay,
            sync,
            entropy,
            free_energy: delay + gamma * sync - temperature * entropy,
            temperature,
            gamma,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.delay.is_finite() && self.sync.is_finite() && self.entropy.is_finite() && self.free_energy.is_finite()
    }
}

fn argmax<S: Scalar>(row: &[S]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// `sum_j' |y_j - y_j'|^2` for every controller `j`.
pub fn sync_sums<S: Scalar>(controllers: &[Point<S>]) -> Vec<S> {
    let m = controllers.len();
    let mut out = vec![S::zero(); m];
    for j in 0..m {
        for k in (j + 1)..m {
            let d = controllers[j].sq_dist(&controllers[k]);
            out[j] += d;
            out[k] += d;
        }
    }
    out
}

/// Distortion between node `x` and controller `y_j`, where `controllers` is
/// the full controller set (the `y_j` term contributes zero).
pub fn distortion<S: Scalar>(x: &Point<S>, y_j: &Point<S>, controllers: &[Point<S>], gamma: S) -> S {
    let sync = controllers.iter().fold(S::zero(), |acc, y| acc + y_j.sq_dist(y));
    x.sq_dist(y_j) + gamma * sync
}

/// Reusable buffers for the Gibbs step.
#[derive(Debug, Clone)]
pub(crate) struct GibbsScratch<S> {
    sync: Vec<S>,
    sq: Vec<S>,
    dist: Vec<S>,
}

impl<S> Default for GibbsScratch<S> {
    fn default() -> Self {
        GibbsScratch { sync: Vec::new(), sq: Vec::new(), dist: Vec::new() }
    }
}

/// Sums accumulated while filling Gibbs weights.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GibbsStats<S> {
    pub cost: CostBreakdown<S>,
}

/// Fills `out` with Gibbs weights using a per-row max shift and returns the
/// cost terms evaluated at those weights.
pub(crate) fn gibbs_fill<S: Scalar>(
    nodes: &[Point<S>],
    controllers: &[Point<S>],
    temperature: S,
    gamma: S,
    out: &mut Matrix<S>,
    scratch: &mut GibbsScratch<S>,
) -> GibbsStats<S> {
    let m = controllers.len();
    scratch.sync.clear();
    scratch.sync.extend(sync_sums(controllers));
    scratch.sq.resize(m, S::zero());
    scratch.dist.resize(m, S::zero());
    if out.rows != nodes.len() || out.cols != m {
        *out = Matrix::zeros(nodes.len(), m);
    }

    let mut delay = S::zero();
    let mut sync = S::zero();
    let mut entropy = S::zero();
    for (i, x) in nodes.iter().enumerate() {
        let mut dmin = S::infinity();
        for j in 0..m {
            let sq = sq_dist(&x.coords, &controllers[j].coords);
            let d = sq + gamma * scratch.sync[j];
            scratch.sq[j] = sq;
            scratch.dist[j] = d;
            dmin = dmin.min(d);
        }
        let row = out.row_mut(i);
        let mut z = S::zero();
        for j in 0..m {
            let e = (-(scratch.dist[j] - dmin) / temperature).exp();
            row[j] = e;
            z += e;
        }
        let mut shifted = S::zero();
        for j in 0..m {
            let p = row[j] / z;
            row[j] = p;
            delay += p * scratch.sq[j];
            sync += p * scratch.sync[j];
            shifted += p * (scratch.dist[j] - dmin);
        }
        // -sum p log p = sum p (d - dmin)/T + ln z
        entropy += shifted / temperature + z.ln();
    }
    GibbsStats { cost: CostBreakdown::new(delay, sync, entropy.max(S::zero()), temperature, gamma) }
}

/// Gibbs association weights `p(y_j|x_i) = exp(-d(x_i,y_j)/T) / Z_i`.
pub fn gibbs_associations<S: Scalar>(
    state: &NetworkState<S>,
    temperature: S,
    gamma: S,
) -> Result<AssociationMatrix<S>> {
    check_temperature(temperature)?;
    let mut out = Matrix::zeros(state.num_nodes(), state.num_controllers());
    let mut scratch = GibbsScratch::default();
    gibbs_fill(&state.nodes, &state.controllers, temperature, gamma, &mut out, &mut scratch);
    Ok(AssociationMatrix(out))
}

pub(crate) fn check_temperature<S: Scalar>(temperature: S) -> Result<()> {
    if !(temperature > S::zero()) || temperature.is_nan() {
        return Err(Error::NonPositiveTemperature(temperature.as_f64()));
    }
    Ok(())
}

/// Raw (unfloored) masses `(1/N) sum_i p(y_j|x_i)`.
pub fn raw_masses<S: Scalar>(assoc: &AssociationMatrix<S>) -> Vec<S> {
    let inv_n = S::one() / S::from_usize_lossy(assoc.num_nodes());
    assoc.0.column_sums().into_iter().map(|s| s * inv_n).collect()
}

/// Posteriors by Bayes' rule with a uniform node prior, and floored masses.
///
/// Each posterior column is the association column normalized to sum to one;
/// a column whose weights all underflowed to zero gets the uniform posterior.
pub fn posteriors_and_masses<S: Scalar>(assoc: &AssociationMatrix<S>) -> (PosteriorMatrix<S>, ClusterMasses<S>) {
    let n = assoc.num_nodes();
    let m = assoc.num_controllers();
    let col = assoc.0.column_sums();
    let inv_n = S::one() / S::from_usize_lossy(n);
    let mut post = Matrix::zeros(n, m);
    for i in 0..n {
        let src = assoc.row(i);
        let dst = post.row_mut(i);
        for j in 0..m {
            dst[j] = if col[j] > S::zero() { src[j] / col[j] } else { inv_n };
        }
    }
    let raw: Vec<S> = col.iter().map(|&c| c * inv_n).collect();
    (PosteriorMatrix(post), ClusterMasses::from_raw(&raw))
}

/// `(Theta y)_j = eta * y_j - gamma * sum_{j' != j} y_j'` with `eta = gamma (M - 1) + 1`.
pub fn theta_apply<S: Scalar>(y: &[Point<S>], gamma: S) -> Vec<Point<S>> {
    let total = column_total(y);
    let diag = S::one() + gamma * S::from_usize_lossy(y.len());
    y.iter().map(|yj| Point::new(yj.coords.iter().zip(&total).map(|(&v, &s)| diag * v - gamma * s).collect())).collect()
}

/// Solves `Theta y = c` in closed form: `y_j = (c_j + gamma * sum c) / (1 + gamma M)`.
pub fn theta_solve<S: Scalar>(c: &[Point<S>], gamma: S) -> Vec<Point<S>> {
    let total = column_total(c);
    let denom = S::one() + gamma * S::from_usize_lossy(c.len());
    c.iter()
        .map(|cj| Point::new(cj.coords.iter().zip(&total).map(|(&v, &s)| (v + gamma * s) / denom).collect()))
        .collect()
}

fn column_total<S: Scalar>(pts: &[Point<S>]) -> Vec<S> {
    let dim = pts.first().map_or(0, Point::dim);
    let mut total = vec![S::zero(); dim];
    for p in pts {
        for (t, &v) in total.iter_mut().zip(&p.coords) {
            *t += v;
        }
    }
    total
}

/// Posterior-weighted node means `c_j = sum_i p(x_i|y_j) x_i`, written into `out`.
///
/// Equivalent to going through [`posteriors_and_masses`] without building the
/// posterior matrix. Returns the raw column sums of `assoc`.
pub(crate) fn posterior_means_into<S: Scalar>(nodes: &[Point<S>], assoc: &Matrix<S>, out: &mut [Point<S>]) -> Vec<S> {
    for c in out.iter_mut() {
        c.coords.iter_mut().for_each(|v| *v = S::zero());
    }
    let mut col = vec![S::zero(); assoc.cols];
    for (x, row) in nodes.iter().zip(assoc.iter_rows()) {
        for ((c, s), &w) in out.iter_mut().zip(col.iter_mut()).zip(row) {
            *s += w;
            for (cv, &xv) in c.coords.iter_mut().zip(&x.coords) {
                *cv += w * xv;
            }
        }
    }
    let n = S::from_usize_lossy(nodes.len());
    for (c, &s) in out.iter_mut().zip(&col) {
        if s > S::zero() {
            c.coords.iter_mut().for_each(|v| *v /= s);
        } else {
            // uniform posterior
            c.coords.iter_mut().for_each(|v| *v = S::zero());
            for x in nodes {
                for (cv, &xv) in c.coords.iter_mut().zip(&x.coords) {
                    *cv += xv;
                }
            }
            c.coords.iter_mut().for_each(|v| *v /= n);
        }
    }
    col
}

/// Optimal controller placement for fixed associations: `Theta^-1 P_{x|y}^T x`.
pub fn optimal_centroids<S: Scalar>(state: &NetworkState<S>, assoc: &AssociationMatrix<S>, gamma: S) -> Vec<Point<S>> {
    let mut c = vec![Point::origin(state.dim()); state.num_controllers()];
    posterior_means_into(&state.nodes, &assoc.0, &mut c);
    theta_solve(&c, gamma)
}

/// Evaluates `F = D1 + gamma D2 - T H` for arbitrary row-stochastic weights.
pub fn free_energy<S: Scalar>(
    state: &NetworkState<S>,
    assoc: &AssociationMatrix<S>,
    temperature: S,
    gamma: S,
) -> CostBreakdown<S> {
    let sync_per = sync_sums(&state.controllers);
    let mut delay = S::zero();
    let mut entropy = S::zero();
    for (x, row) in state.nodes.iter().zip(assoc.0.iter_rows()) {
        for (y, &p) in state.controllers.iter().zip(row) {
            delay += p * x.sq_dist(y);
            if p > S::zero() {
                entropy -= p * p.ln();
            }
        }
    }
    let sync = assoc.0.column_sums().iter().zip(&sync_per).fold(S::zero(), |acc, (&c, &s)| acc + c * s);
    CostBreakdown::new(delay, sync, entropy, temperature, gamma)
}
