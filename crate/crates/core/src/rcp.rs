//! Real-time controller placement: the tracking-error vector `y_bar`, the
//! Lyapunov-based control law, and the annealed explicit-Euler run loop.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::clustering::{
    check_temperature, gibbs_fill, posterior_means_into, theta_apply, theta_solve, AssociationMatrix, ClusterMasses,
    CostBreakdown, GibbsScratch, Matrix,
};
use crate::error::{Error, Result};
use crate::model::{sq_norm, MobilitySpec, NetworkState, Point};
use crate::rng;
use crate::scalar::Scalar;
use crate::scenario::Scenario;
use crate::trace::{RunTrace, TraceHeader, TraceRow};

pub const DEFAULT_EPS_DEN: f64 = 1e-9;
pub const DEFAULT_T_MIN: f64 = 1e-6;
/// Radius of the seeded perturbation around the node centroid used to
/// initialize controllers.
pub const INIT_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains<S> {
    pub k0: S,
    /// Added to `y_bar^T P_y y_bar` so the feed-forward term stays finite at the optimum.
    pub eps_den: S,
    /// Optional cap on each controller's speed.
    pub u_max: Option<S>,
}

impl<S: Scalar> ControllerGains<S> {
    pub fn new(k0: S) -> Result<Self> {
        Self { k0, eps_den: S::lit(DEFAULT_EPS_DEN), u_max: None }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.k0 > S::zero()) || !self.k0.is_finite() {
            return Err(Error::config(format!("k0 must be positive (got {})", self.k0)));
        }
        if !(self.eps_den > S::zero()) {
            return Err(Error::config("eps_den must be positive"));
        }
        if let Some(cap) = self.u_max {
            if !(cap > S::zero()) {
                return Err(Error::config("u_max must be positive"));
            }
        }
        Ok(self)
    }
}

/// Geometric temperature schedule `T <- max(alpha T, t_min)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule<S> {
    pub t0: S,
    pub alpha: S,
    pub t_min: S,
}

impl<S: Scalar> AnnealSchedule<S> {
    pub fn new(t0: S, alpha: S, t_min: S) -> Result<Self> {
        if !(alpha > S::zero() && alpha < S::one()) {
            return Err(Error::config(format!("alpha must lie in (0, 1) (got {alpha})")));
        }
        if !(t_min > S::zero()) || !(t0 >= t_min) || !t0.is_finite() {
            return Err(Error::config(format!("need 0 < t_min <= t0 (got t_min={t_min}, t0={t0})")));
        }
        Ok(AnnealSchedule { t0, alpha, t_min })
    }

    /// Holds the temperature at `t` for the whole run.
    pub fn frozen(t: S) -> Result<Self> {
        Self::new(t, S::lit(0.5), t)
    }

    #[inline]
    pub fn next(&self, t: S) -> S {
        (self.alpha * t).max(self.t_min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcpStepResult<S> {
    /// Controllers after the Euler update.
    pub controllers: Vec<Point<S>>,
    pub u: Vec<Point<S>>,
    pub y_bar: Vec<Point<S>>,
    pub lyapunov_rate: S,
    /// Cost at the pre-update controllers and the freshly computed weights.
    pub cost: CostBreakdown<S>,
    pub masses: ClusterMasses<S>,
    /// Mean distance from the pre-update controllers to the optimal placement
    /// for the current weights.
    pub fixed_point_gap: S,
}

/// `y_bar = N (Theta y - P_{x|y}^T x)`, computed without inverting Theta.
pub fn y_bar<S: Scalar>(state: &NetworkState<S>, assoc: &AssociationMatrix<S>, gamma: S) -> Vec<Point<S>> {
    let mut c = vec![Point::origin(state.dim()); state.num_controllers()];
    posterior_means_into(&state.nodes, assoc.matrix(), &mut c);
    y_bar_from_means(&state.controllers, &c, gamma, state.num_nodes())
}

fn y_bar_from_means<S: Scalar>(y: &[Point<S>], c: &[Point<S>], gamma: S, n: usize) -> Vec<Point<S>> {
    let n = S::from_usize_lossy(n);
    theta_apply(y, gamma)
        .into_iter()
        .zip(c)
        .map(|(t, cj)| Point::new(t.coords.iter().zip(&cj.coords).map(|(&a, &b)| n * (a - b)).collect()))
        .collect()
}

/// `sum_i phi_i . (x_i - sum_j p(y_j|x_i) y_j)`
fn drift_numerator<S: Scalar>(
    nodes: &[Point<S>],
    controllers: &[Point<S>],
    assoc: &Matrix<S>,
    phi: &[Point<S>],
    buf: &mut Vec<S>,
) -> S {
    let d = controllers.first().map_or(0, Point::dim);
    buf.resize(d, S::zero());
    let mut total = S::zero();
    for ((x, v), row) in nodes.iter().zip(phi).zip(assoc.iter_rows()) {
        if v.coords.iter().all(|c| c.is_zero()) {
            continue;
        }
        buf.copy_from_slice(&x.coords);
        for (y, &w) in controllers.iter().zip(row) {
            for (b, &yv) in buf.iter_mut().zip(&y.coords) {
                *b -= w * yv;
            }
        }
        total += buf.iter().zip(&v.coords).fold(S::zero(), |acc, (&b, &p)| acc + b * p);
    }
    total
}

fn weighted_sq_norm<S: Scalar>(y_bar: &[Point<S>], masses: &[S]) -> S {
    y_bar.iter().zip(masses).fold(S::zero(), |acc, (v, &m)| acc + m * sq_norm(&v.coords))
}

fn apply_control<S: Scalar>(
    y_bar: &[Point<S>],
    masses: &[S],
    numerator: S,
    gains: &ControllerGains<S>,
    out: &mut Vec<Point<S>>,
) {
    let denom = weighted_sq_norm(y_bar, masses) + gains.eps_den;
    let scale = -(gains.k0 + numerator / denom);
    out.clear();
    for v in y_bar {
        let mut u = Point::new(v.coords.iter().map(|&c| scale * c).collect());
        if let Some(cap) = gains.u_max {
            let norm = sq_norm(&u.coords).sqrt();
            if norm > cap {
                let k = cap / norm;
                u.coords.iter_mut().for_each(|c| *c *= k);
            }
        }
        out.push(u);
    }
}

/// Control law `u = -[k0 + (x - P_{y|x} y)^T phi / (y_bar^T P_y y_bar + eps)] y_bar`.
pub fn control_law<S: Scalar>(
    state: &NetworkState<S>,
    assoc: &AssociationMatrix<S>,
    phi: &[Point<S>],
    gains: &ControllerGains<S>,
    gamma: S,
) -> Result<Vec<Point<S>>> {
    if phi.len() != state.num_nodes() {
        return Err(Error::CountMismatch { left: phi.len(), right: state.num_nodes() });
    }
    let ybar = y_bar(state, assoc, gamma);
    let (_, masses) = crate::clustering::posteriors_and_masses(assoc);
    let num = drift_numerator(&state.nodes, &state.controllers, assoc.matrix(), phi, &mut Vec::new());
    let mut u = Vec::new();
    apply_control(&ybar, masses.as_slice(), num, gains, &mut u);
    Ok(u)
}

/// `dF/dt = -2 k0 sum_j p(y_j) |y_bar_j|^2`, never positive.
pub fn lyapunov_rate<S: Scalar>(y_bar: &[Point<S>], masses: &ClusterMasses<S>, k0: S) -> S {
    -(S::lit(2.0) * k0 * weighted_sq_norm(y_bar, masses.as_slice()))
}

/// Reusable buffers for repeated placement steps.
#[derive(Debug, Clone)]
pub struct RcpEngine<S> {
    assoc: Matrix<S>,
    scratch: GibbsScratch<S>,
    means: Vec<Point<S>>,
    phi: Vec<Point<S>>,
    buf: Vec<S>,
}

impl<S: Scalar> RcpEngine<S> {
    pub fn new(num_nodes: usize, num_controllers: usize, dim: usize) -> Self {
        RcpEngine {
            assoc: Matrix::zeros(num_nodes, num_controllers),
            scratch: GibbsScratch::default(),
            means: vec![Point::origin(dim); num_controllers],
            phi: vec![Point::origin(dim); num_nodes],
            buf: Vec::with_capacity(dim),
        }
    }

    /// Weights of the most recent step.
    pub fn associations(&self) -> AssociationMatrix<S> {
        AssociationMatrix(self.assoc.clone())
    }

    /// One Euler step at temperature `temperature`; nodes are read from `state`
    /// and their velocities from `spec` at `state.t`.
    pub fn step(
        &mut self,
        state: &NetworkState<S>,
        spec: &MobilitySpec<S>,
        temperature: S,
        gains: &ControllerGains<S>,
        gamma: S,
        dt: S,
    ) -> Result<RcpStepResult<S>> {
        check_temperature(temperature)?;
        if !(dt > S::zero()) {
            return Err(Error::config("dt must be positive"));
        }
        if spec.len() != state.num_nodes() {
            return Err(Error::CountMismatch { left: spec.len(), right: state.num_nodes() });
        }
        let n = state.num_nodes();
        let m = state.num_controllers();
        let y = &state.controllers;

        let stats = gibbs_fill(&state.nodes, y, temperature, gamma, &mut self.assoc, &mut self.scratch);
        self.means.resize(m, Point::origin(state.dim()));
        let col = posterior_means_into(&state.nodes, &self.assoc, &mut self.means);
        let inv_n = S::one() / S::from_usize_lossy(n);
        let raw: Vec<S> = col.iter().map(|&c| c * inv_n).collect();
        let masses = ClusterMasses::from_raw(&raw);

        let ybar = y_bar_from_means(y, &self.means, gamma, n);

        self.phi.resize(n, Point::origin(state.dim()));
        spec.velocities_into(state.t, &mut self.phi);
        let num = drift_numerator(&state.nodes, y, &self.assoc, &self.phi, &mut self.buf);

        let mut u = Vec::with_capacity(m);
        apply_control(&ybar, masses.as_slice(), num, gains, &mut u);
        let rate = lyapunov_rate(&ybar, &masses, gains.k0);

        let optimal = theta_solve(&self.means, gamma);
        let gap = y.iter().zip(&optimal).fold(S::zero(), |acc, (a, b)| acc + a.dist(b)) / S::from_usize_lossy(m);

        let controllers: Vec<Point<S>> = y
            .iter()
            .zip(&u)
            .map(|(p, v)| Point::new(p.coords.iter().zip(&v.coords).map(|(&a, &b)| a + b * dt).collect()))
            .collect();

        if !stats.cost.is_finite() || !rate.is_finite() || controllers.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("placement step at t={}", state.t)));
        }
        Ok(RcpStepResult {
            controllers,
            u,
            y_bar: ybar,
            lyapunov_rate: rate,
            cost: stats.cost,
            masses,
            fixed_point_gap: gap,
        })
    }
}

/// Single explicit-Euler placement step. Nodes are not advanced.
pub fn rcp_step<S: Scalar>(
    state: &NetworkState<S>,
    spec: &MobilitySpec<S>,
    temperature: S,
    gains: &ControllerGains<S>,
    gamma: S,
    dt: S,
) -> Result<RcpStepResult<S>> {
    let mut engine = RcpEngine::new(state.num_nodes(), state.num_controllers(), state.dim());
    engine.step(state, spec, temperature, gains, gamma, dt)
}

/// Seeded controller start: small uniform perturbations around the centroid of `nodes`.
pub fn initial_controllers<S: Scalar>(nodes: &[Point<S>], m: usize, seed: u64, stream: u64) -> Vec<Point<S>> {
    let d = nodes[0].dim();
    let mut center = vec![S::zero(); d];
    for x in nodes {
        for (c, &v) in center.iter_mut().zip(&x.coords) {
            *c += v;
        }
    }
    let n = S::from_usize_lossy(nodes.len());
    center.iter_mut().for_each(|c| *c /= n);
    let mut r = rng::stream(seed, stream);
    (0..m).map(|_| rng::jitter(&mut r, &center, S::lit(INIT_RADIUS))).collect()
}

pub(crate) fn header_for<S: Scalar>(
    algorithm: &str,
    scenario: &Scenario<S>,
    params: BTreeMap<String, f64>,
) -> TraceHeader {
    TraceHeader {
        algorithm: algorithm.to_string(),
        num_nodes: scenario.num_nodes(),
        num_controllers: scenario.num_controllers,
        dimension: scenario.dim(),
        steps: scenario.steps,
        horizon: scenario.horizon.as_f64(),
        seed: scenario.seed,
        gamma: scenario.gamma.as_f64(),
        params,
    }
}

pub(crate) fn to_f64_rows<S: Scalar>(pts: &[Point<S>]) -> Vec<Vec<f64>> {
    pts.iter().map(|p| p.coords.iter().map(|c| c.as_f64()).collect()).collect()
}

/// Per-step hook for [`run_rcp_with`].
pub trait StepObserver<S> {
    fn observe(&mut self, step: usize, state: &NetworkState<S>, result: &RcpStepResult<S>);
}

impl<S, F: FnMut(usize, &NetworkState<S>, &RcpStepResult<S>)> StepObserver<S> for F {
    fn observe(&mut self, step: usize, state: &NetworkState<S>, result: &RcpStepResult<S>) {
        self(step, state, result)
    }
}

/// Runs the annealed placement loop over the scenario horizon with
/// `dt = horizon / steps`. Row `i` records time `i * dt`, the controllers in
/// use at that time, and the wall time of the step that updated them.
pub fn run_rcp<S: Scalar>(
    scenario: &Scenario<S>,
    gains: &ControllerGains<S>,
    schedule: &AnnealSchedule<S>,
) -> Result<RunTrace> {
    run_rcp_with(scenario, gains, schedule, &mut |_: usize, _: &NetworkState<S>, _: &RcpStepResult<S>| {})
}

pub fn run_rcp_with<S: Scalar>(
    scenario: &Scenario<S>,
    gains: &ControllerGains<S>,
    schedule: &AnnealSchedule<S>,
    observer: &mut dyn StepObserver<S>,
) -> Result<RunTrace> {
    scenario.validate()?;
    let gains = gains.validated()?;
    let n = scenario.num_nodes();
    let m = scenario.num_controllers;
    let d = scenario.dim();
    let dt = scenario.dt();
    let spec = &scenario.mobility;

    let starts = scenario.start_points();
    let controllers = initial_controllers(&starts, m, scenario.seed, rng::STREAM_CONTROLLERS);
    let mut state = NetworkState::new(S::zero(), starts, controllers)?;
    let mut engine = RcpEngine::new(n, m, d);
    let mut temperature = schedule.t0;

    let mut params = BTreeMap::from([
        ("k0".to_string(), gains.k0.as_f64()),
        ("eps_den".to_string(), gains.eps_den.as_f64()),
        ("t0".to_string(), schedule.t0.as_f64()),
        ("alpha".to_string(), schedule.alpha.as_f64()),
        ("t_min".to_string(), schedule.t_min.as_f64()),
    ]);
    if let Some(cap) = gains.u_max {
        params.insert("u_max".to_string(), cap.as_f64());
    }
    let mut rows = Vec::with_capacity(scenario.steps);
    for i in 0..scenario.steps {
        let t = scenario.time_at(i);
        let started = Instant::now();
        state.t = t;
        spec.positions_into(t, &mut state.nodes);
        let result = engine.step(&state, spec, temperature, &gains, scenario.gamma, dt)?;
        let wall = started.elapsed();

        observer.observe(i, &state, &result);
        rows.push(TraceRow {
            step: i,
            t: t.as_f64(),
            temperature: temperature.as_f64(),
            d1: result.cost.delay.as_f64(),
            d2: result.cost.sync.as_f64(),
            entropy: result.cost.entropy.as_f64(),
            free_energy: result.cost.free_energy.as_f64(),
            tracking_error: result.fixed_point_gap.as_f64(),
            wall_us: wall.as_secs_f64() * 1e6,
            controllers: to_f64_rows(&state.controllers),
        });
        state.controllers = result.controllers;
        temperature = schedule.next(temperature);
    }
    Ok(RunTrace { header: header_for("rcp", scenario, params), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{gibbs_associations, optimal_centroids};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> Point<f64> {
        Point::from_f64(c)
    }

    fn three_blobs() -> Vec<Point<f64>> {
        let centers = [[-0.6, -0.5], [0.6, -0.4], [0.0, 0.7]];
        let mut r = rng::stream(5, 77);
        (0..30).map(|i| rng::jitter(&mut r, &centers[i % 3], 0.15)).collect()
    }

    #[test]
    fn y_bar_examples() {
        let s = NetworkState::new(0.0, vec![p(&[1.0, 0.0])], vec![p(&[0.0, 0.0])]).unwrap();
        let a = AssociationMatrix::hard(&[0], 1);
        let yb = y_bar(&s, &a, 0.0);
        assert_eq!(yb, vec![p(&[-1.0, 0.0])]);

        let nodes = three_blobs();
        let s = NetworkState::new(0.0, nodes.clone(), vec![p(&[0.1, 0.0]), p(&[0.0, 0.2]), p(&[-0.3, 0.0])]).unwrap();
        let a = gibbs_associations(&s, 0.05, 0.3).unwrap();
        let opt = NetworkState { controllers: optimal_centroids(&s, &a, 0.3), ..s.clone() };
        for v in y_bar(&opt, &a, 0.3) {
            assert!(sq_norm(&v.coords).sqrt() < 1e-10);
        }
    }

    #[test]
    fn y_bar_is_homogeneous() {
        let nodes = three_blobs();
        let s = NetworkState::new(0.0, nodes, vec![p(&[0.1, 0.0]), p(&[0.0, 0.2])]).unwrap();
        let a = gibbs_associations(&s, 0.1, 0.2).unwrap();
        let base = y_bar(&s, &a, 0.2);
        let k = 3.5;
        let scaled = NetworkState {
            nodes: s.nodes.iter().map(|x| Point::new(x.coords.iter().map(|v| v * k).collect())).collect(),
            controllers: s.controllers.iter().map(|x| Point::new(x.coords.iter().map(|v| v * k).collect())).collect(),
            t: 0.0,
        };
        let yb = y_bar(&scaled, &a, 0.2);
        for (u, v) in yb.iter().zip(&base) {
            for (a, b) in u.coords.iter().zip(&v.coords) {
                assert_relative_eq!(*a, k * b, max_relative = 1e-12, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn control_law_examples() {
        let gains = ControllerGains::new(1.0).unwrap();
        let s = NetworkState::new(0.0, vec![p(&[1.0, 0.0])], vec![p(&[0.0, 0.0])]).unwrap();
        let a = AssociationMatrix::hard(&[0], 1);
        let u = control_law(&s, &a, &[p(&[0.0, 0.0])], &gains, 0.0).unwrap();
        assert_relative_eq!(u[0].coords[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(u[0].coords[1], 0.0, epsilon = 1e-15);

        // at the optimum y_bar = 0 so u = 0 even with a moving network
        let opt = NetworkState::new(0.0, vec![p(&[1.0, 0.0])], vec![p(&[1.0, 0.0])]).unwrap();
        let u = control_law(&opt, &a, &[p(&[5.0, -2.0])], &gains, 0.0).unwrap();
        assert_eq!(u, vec![p(&[0.0, 0.0])]);

        // static network: u = -k0 y_bar
        let nodes = three_blobs();
        let s = NetworkState::new(0.0, nodes.clone(), vec![p(&[0.1, 0.0]), p(&[0.0, 0.2])]).unwrap();
        let a = gibbs_associations(&s, 0.2, 0.1).unwrap();
        let g = ControllerGains::new(0.7).unwrap();
        let u = control_law(&s, &a, &vec![p(&[0.0, 0.0]); nodes.len()], &g, 0.1).unwrap();
        let yb = y_bar(&s, &a, 0.1);
        for (uj, yj) in u.iter().zip(&yb) {
            for (a, b) in uj.coords.iter().zip(&yj.coords) {
                assert_relative_eq!(*a, -0.7 * b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn velocity_cap_is_respected() {
        let gains = ControllerGains { k0: 10.0, eps_den: 1e-9, u_max: Some(0.25) };
        let s = NetworkState::new(0.0, vec![p(&[1.0, 0.0])], vec![p(&[0.0, 0.0])]).unwrap();
        let u = control_law(&s, &AssociationMatrix::hard(&[0], 1), &[p(&[0.0, 0.0])], &gains, 0.0).unwrap();
        assert_relative_eq!(u[0].coords[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn lyapunov_rate_examples() {
        let masses = ClusterMasses::from_raw(&[1.0]);
        assert_eq!(lyapunov_rate(&[p(&[0.0, 0.0])], &masses, 3.0), 0.0);
        assert_eq!(lyapunov_rate(&[p(&[-1.0, 0.0])], &masses, 1.0), -2.0);
    }

    #[test]
    fn schedule_and_gain_validation() {
        assert!(AnnealSchedule::new(1.0, 1.0, 0.1).is_err());
        assert!(AnnealSchedule::new(1.0, 0.0, 0.1).is_err());
        assert!(AnnealSchedule::new(0.01, 0.5, 0.1).is_err());
        let s = AnnealSchedule::new(1.0, 0.5, 0.2).unwrap();
        assert_eq!(s.next(1.0), 0.5);
        assert_eq!(s.next(0.3), 0.2);
        assert!(ControllerGains::new(0.0).is_err());
    }

    #[test]
    fn step_at_optimum_is_stationary() {
        let nodes = three_blobs();
        let spec = MobilitySpec::stationary(&nodes).unwrap();
        let mut s = NetworkState::new(0.0, nodes, vec![p(&[0.5, -0.4]), p(&[-0.5, -0.5]), p(&[0.0, 0.6])]).unwrap();
        let gains = ControllerGains::new(0.01).unwrap();
        // settle onto the fixed point at this temperature
        for _ in 0..2000 {
            let a = gibbs_associations(&s, 0.05, 0.0).unwrap();
            s.controllers = optimal_centroids(&s, &a, 0.0);
        }
        let before = s.controllers.clone();
        let mut engine = RcpEngine::new(30, 3, 2);
        for _ in 0..200 {
            let r = engine.step(&s, &spec, 0.05, &gains, 0.0, 0.1).unwrap();
            s.controllers = r.controllers;
        }
        for (a, b) in s.controllers.iter().zip(&before) {
            assert!(a.dist(b) < 1e-9);
        }
    }

    #[test]
    fn step_contracts_toward_centroid() {
        let nodes = three_blobs();
        let spec = MobilitySpec::stationary(&nodes).unwrap();
        let s = NetworkState::new(0.0, nodes, vec![p(&[0.9, 0.9])]).unwrap();
        let gains = ControllerGains::new(1.0).unwrap();
        let dt = 0.02; // k0 N dt = 0.6
        let r = rcp_step(&s, &spec, 0.1, &gains, 0.0, dt).unwrap();
        let a = gibbs_associations(&s, 0.1, 0.0).unwrap();
        let c = optimal_centroids(&s, &a, 0.0);
        assert!(r.controllers[0].dist(&c[0]) < s.controllers[0].dist(&c[0]));
        assert_relative_eq!(r.fixed_point_gap, s.controllers[0].dist(&c[0]), max_relative = 1e-12);
    }

    #[test]
    fn run_rows_and_determinism() {
        let file = crate::scenario::generate_scenario(&crate::scenario::ScenarioGenConfig {
            num_clusters: 2,
            nodes_per_cluster: 10,
            num_controllers: 2,
            steps: 37,
            seed: 9,
            ..Default::default()
        })
        .unwrap();
        let sc = Scenario::<f64>::from_file(&file).unwrap();
        let gains = ControllerGains::new(sc.k0).unwrap();
        let sched = AnnealSchedule::new(sc.t0_temperature, sc.alpha, DEFAULT_T_MIN).unwrap();
        let mut a = run_rcp(&sc, &gains, &sched).unwrap();
        let mut b = run_rcp(&sc, &gains, &sched).unwrap();
        assert_eq!(a.rows.len(), 37);
        assert!(a.rows.windows(2).all(|w| w[1].t > w[0].t));
        a.zero_walltime();
        b.zero_walltime();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn run_in_f32() {
        let file = crate::scenario::generate_scenario(&crate::scenario::ScenarioGenConfig {
            num_clusters: 2,
            nodes_per_cluster: 10,
            num_controllers: 2,
            steps: 20,
            ..Default::default()
        })
        .unwrap();
        let sc = Scenario::<f32>::from_file(&file).unwrap();
        let gains = ControllerGains::new(sc.k0).unwrap();
        let sched = AnnealSchedule::new(sc.t0_temperature, sc.alpha, 1e-4).unwrap();
        let trace = run_rcp(&sc, &gains, &sched).unwrap();
        assert!(trace.rows.iter().all(|r| r.free_energy.is_finite()));
    }

    proptest! {
        #[test]
        fn rate_is_never_positive(
            pts in proptest::collection::vec(proptest::collection::vec(-1.0..1.0f64, 2), 4..30),
            ctrl in proptest::collection::vec(proptest::collection::vec(-1.0..1.0f64, 2), 1..4),
            vel in proptest::collection::vec(-1.0..1.0f64, 2),
            temp in 1e-4..10.0f64,
            gamma in 0.0..1.0f64,
        ) {
            let nodes: Vec<Point<f64>> = pts.iter().map(|c| p(c)).collect();
            let ends: Vec<Point<f64>> = nodes.iter().map(|x| p(&[x.coords[0] + vel[0], x.coords[1] + vel[1]])).collect();
            let spec = MobilitySpec::new(
                nodes.iter().zip(&ends).map(|(s, e)| crate::model::NodeMotion { start: s.clone(), end: e.clone(), rate: 0.7 }).collect(),
            ).unwrap();
            let s = NetworkState::new(0.0, nodes, ctrl.iter().map(|c| p(c)).collect()).unwrap();
            let r = rcp_step(&s, &spec, temp, &ControllerGains::new(0.3).unwrap(), gamma, 1e-3).unwrap();
            prop_assert!(r.lyapunov_rate <= 0.0);
            prop_assert!(r.cost.free_energy.is_finite());
        }
    }
}
