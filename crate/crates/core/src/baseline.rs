//! Frame-by-frame baseline: every snapshot is solved from scratch by
//! deterministic annealing, alternating Gibbs weights and optimal centroids
//! at each temperature level.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::clustering::{
    gibbs_fill, posterior_means_into, theta_solve, AssociationMatrix, CostBreakdown, GibbsScratch, Matrix,
};
use crate::error::{Error, Result};
use crate::model::Point;
use crate::rcp::{header_for, initial_controllers, to_f64_rows, DEFAULT_T_MIN};
use crate::rng;
use crate::scalar::Scalar;
use crate::scenario::Scenario;
use crate::trace::{RunTrace, TraceRow};

/// Slack allowed before an inner-loop free-energy increase is flagged.
pub const DESCENT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSolverConfig<S> {
    pub t0: S,
    pub alpha: S,
    pub t_min: S,
    /// Inner loop stops once no controller moves more than this.
    pub inner_tol: S,
    pub max_inner_iters: usize,
    /// Radius of the seeded jitter applied to the controllers at the start of
    /// every temperature level, so coincident controllers can separate.
    pub level_jitter: S,
    /// Start each frame from the previous frame's placement at `t_min` only.
    pub warm_start: bool,
}

impl<S: Scalar> FrameSolverConfig<S> {
    pub fn with_t0(t0: S) -> Self {
        FrameSolverConfig {
            t0,
            alpha: S::lit(0.9),
            t_min: S::lit(DEFAULT_T_MIN),
            inner_tol: S::lit(1e-6),
            max_inner_iters: 100,
            level_jitter: S::lit(1e-3),
            warm_start: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > S::zero() && self.alpha < S::one()) {
            return Err(Error::config("frame solver alpha must lie in (0, 1)"));
        }
        if !(self.t_min > S::zero()) || !(self.t0 >= self.t_min) {
            return Err(Error::config("frame solver needs 0 < t_min <= t0"));
        }
        if !(self.inner_tol > S::zero()) || self.max_inner_iters == 0 {
            return Err(Error::config("frame solver needs inner_tol > 0 and max_inner_iters >= 1"));
        }
        if !(self.level_jitter >= S::zero()) {
            return Err(Error::config("level_jitter must be nonnegative"));
        }
        Ok(())
    }

    /// Number of temperature levels visited from `t0` down to `t_min`.
    pub fn num_levels(&self) -> usize {
        let mut t = self.t0;
        let mut levels = 1;
        while t > self.t_min {
            t = (self.alpha * t).max(self.t_min);
            levels += 1;
        }
        levels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSolution<S> {
    pub controllers: Vec<Point<S>>,
    pub assoc: AssociationMatrix<S>,
    pub cost: CostBreakdown<S>,
    pub iterations: usize,
    pub levels: usize,
    /// Inner iterations where the free energy rose by more than [`DESCENT_SLACK`].
    pub descent_violations: usize,
    pub wall_time: Duration,
}

/// Outcome of alternating minimization at one fixed temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelOutcome<S> {
    pub controllers: Vec<Point<S>>,
    pub iterations: usize,
    /// Free energy at the Gibbs weights of each iterate, in order.
    pub free_energy: Vec<S>,
    pub converged: bool,
}

struct Workspace<S> {
    assoc: Matrix<S>,
    scratch: GibbsScratch<S>,
    means: Vec<Point<S>>,
}

impl<S: Scalar> Workspace<S> {
    fn new(n: usize, m: usize, d: usize) -> Self {
        Workspace { assoc: Matrix::zeros(n, m), scratch: GibbsScratch::default(), means: vec![Point::origin(d); m] }
    }

    fn level(
        &mut self,
        nodes: &[Point<S>],
        mut y: Vec<Point<S>>,
        temperature: S,
        gamma: S,
        inner_tol: S,
        max_iters: usize,
        trace: &mut Vec<S>,
    ) -> (Vec<Point<S>>, usize, bool) {
        for it in 1..=max_iters {
            let stats = gibbs_fill(nodes, &y, temperature, gamma, &mut self.assoc, &mut self.scratch);
            trace.push(stats.cost.free_energy);
            posterior_means_into(nodes, &self.assoc, &mut self.means);
            let next = theta_solve(&self.means, gamma);
            let moved = y.iter().zip(&next).fold(S::zero(), |acc, (a, b)| acc.max(a.dist(b)));
            y = next;
            if moved < inner_tol {
                return (y, it, true);
            }
        }
        (y, max_iters, false)
    }
}

/// Alternates Gibbs weights and optimal centroids at a fixed temperature.
pub fn anneal_level<S: Scalar>(
    nodes: &[Point<S>],
    controllers: Vec<Point<S>>,
    temperature: S,
    gamma: S,
    inner_tol: S,
    max_iters: usize,
) -> Result<LevelOutcome<S>> {
    crate::clustering::check_temperature(temperature)?;
    let d = nodes.first().ok_or(Error::EmptyPointSet)?.dim();
    let mut ws = Workspace::new(nodes.len(), controllers.len(), d);
    let mut fe = Vec::new();
    let (y, iterations, converged) = ws.level(nodes, controllers, temperature, gamma, inner_tol, max_iters, &mut fe);
    Ok(LevelOutcome { controllers: y, iterations, free_energy: fe, converged })
}

fn count_increases<S: Scalar>(trace: &[S]) -> usize {
    let slack = S::lit(DESCENT_SLACK);
    trace.windows(2).filter(|w| w[1] - w[0] > slack * (S::one() + w[0].abs())).count()
}

fn solve_from<S: Scalar>(
    nodes: &[Point<S>],
    start: Vec<Point<S>>,
    gamma: S,
    config: &FrameSolverConfig<S>,
    seed: u64,
    anneal: bool,
) -> Result<FrameSolution<S>> {
    let started = Instant::now();
    let n = nodes.len();
    let m = start.len();
    if m == 0 || n < m {
        return Err(Error::config(format!("need N >= M >= 1 (N={n}, M={m})")));
    }
    let d = nodes[0].dim();
    let mut ws = Workspace::new(n, m, d);
    let mut jitter_rng = rng::stream(seed, rng::STREAM_FRAME);
    let mut y = start;
    let mut temperature = if anneal { config.t0 } else { config.t_min };
    let mut iterations = 0;
    let mut levels = 0;
    let mut violations = 0;
    let mut fe = Vec::new();
    loop {
        if anneal && config.level_jitter > S::zero() {
            y = y.iter().map(|p| rng::jitter(&mut jitter_rng, &p.coords, config.level_jitter)).collect();
        }
        fe.clear();
        let (next, its, _) = ws.level(nodes, y, temperature, gamma, config.inner_tol, config.max_inner_iters, &mut fe);
        y = next;
        iterations += its;
        levels += 1;
        violations += count_increases(&fe);
        if temperature <= config.t_min {
            break;
        }
        temperature = (config.alpha * temperature).max(config.t_min);
    }
    let stats = gibbs_fill(nodes, &y, temperature, gamma, &mut ws.assoc, &mut ws.scratch);
    if !stats.cost.is_finite() || y.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("frame solution".into()));
    }
    Ok(FrameSolution {
        controllers: y,
        assoc: AssociationMatrix(ws.assoc),
        cost: stats.cost,
        iterations,
        levels,
        descent_violations: violations,
        wall_time: started.elapsed(),
    })
}

/// Solves one snapshot from a seeded cold start, annealing from `t0` to `t_min`.
pub fn solve_frame<S: Scalar>(
    nodes: &[Point<S>],
    num_controllers: usize,
    gamma: S,
    config: &FrameSolverConfig<S>,
    seed: u64,
) -> Result<FrameSolution<S>> {
    config.validate()?;
    if nodes.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if num_controllers == 0 || nodes.len() < num_controllers {
        return Err(Error::config(format!("need N >= M >= 1 (N={}, M={num_controllers})", nodes.len())));
    }
    let start = initial_controllers(nodes, num_controllers, seed, rng::STREAM_CONTROLLERS);
    solve_from(nodes, start, gamma, config, seed, true)
}

/// Re-solves every snapshot of the scenario independently.
pub fn run_frame_by_frame<S: Scalar>(scenario: &Scenario<S>, config: &FrameSolverConfig<S>) -> Result<RunTrace> {
    scenario.validate()?;
    config.validate()?;
    let m = scenario.num_controllers;
    let mut nodes = scenario.start_points();
    let mut previous: Option<Vec<Point<S>>> = None;
    let mut rows = Vec::with_capacity(scenario.steps);
    for i in 0..scenario.steps {
        let t = scenario.time_at(i);
        let started = Instant::now();
        scenario.mobility.positions_into(t, &mut nodes);
        let sol = match (&previous, config.warm_start) {
            (Some(prev), true) => solve_from(&nodes, prev.clone(), scenario.gamma, config, scenario.seed, false)?,
            _ => solve_frame(&nodes, m, scenario.gamma, config, scenario.seed)?,
        };
        let wall = started.elapsed();

        let mut means = vec![Point::origin(scenario.dim()); m];
        posterior_means_into(&nodes, &sol.assoc.0, &mut means);
        let optimal = theta_solve(&means, scenario.gamma);
        let gap = sol.controllers.iter().zip(&optimal).fold(S::zero(), |acc, (a, b)| acc + a.dist(b))
            / S::from_usize_lossy(m);

        rows.push(TraceRow {
            step: i,
            t: t.as_f64(),
            temperature: sol.cost.temperature.as_f64(),
            d1: sol.cost.delay.as_f64(),
            d2: sol.cost.sync.as_f64(),
            entropy: sol.cost.entropy.as_f64(),
            free_energy: sol.cost.free_energy.as_f64(),
            tracking_error: gap.as_f64(),
            wall_us: wall.as_secs_f64() * 1e6,
            controllers: to_f64_rows(&sol.controllers),
        });
        if config.warm_start {
            previous = Some(sol.controllers);
        }
    }
    let params = BTreeMap::from([
        ("t0".to_string(), config.t0.as_f64()),
        ("alpha".to_string(), config.alpha.as_f64()),
        ("t_min".to_string(), config.t_min.as_f64()),
        ("inner_tol".to_string(), config.inner_tol.as_f64()),
        ("max_inner_iters".to_string(), config.max_inner_iters as f64),
        ("level_jitter".to_string(), config.level_jitter.as_f64()),
        ("warm_start".to_string(), if config.warm_start { 1.0 } else { 0.0 }),
    ]);
    Ok(RunTrace { header: header_for("frame", scenario, params), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::distortion;
    use crate::model::MobilitySpec;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn blob(seed: u64, center: &[f64], count: usize, std: f64) -> Vec<Point<f64>> {
        let mut r = rng::stream(seed, 500);
        (0..count)
            .map(|_| Point::new(center.iter().map(|&c| c + std * r.sample::<f64, _>(StandardNormal)).collect()))
            .collect()
    }

    fn mean(pts: &[Point<f64>]) -> Vec<f64> {
        let mut m = vec![0.0; pts[0].dim()];
        for p in pts {
            for (a, b) in m.iter_mut().zip(&p.coords) {
                *a += b;
            }
        }
        m.iter().map(|v| v / pts.len() as f64).collect()
    }

    fn config() -> FrameSolverConfig<f64> {
        FrameSolverConfig::with_t0(16.0)
    }

    #[test]
    fn single_controller_lands_on_mean() {
        let pts = blob(1, &[0.2, -0.3], 80, 0.2);
        for gamma in [0.0, 0.5] {
            let sol = solve_frame(&pts, 1, gamma, &config(), 4).unwrap();
            let mu = mean(&pts);
            assert!(sol.controllers[0].dist(&Point::new(mu)) < 1e-6);
        }
    }

    #[test]
    fn two_separated_blobs() {
        let a = blob(2, &[0.0, 0.0], 60, 1.0);
        let b = blob(3, &[12.0, 0.0], 60, 1.0);
        let pts: Vec<_> = a.iter().chain(&b).cloned().collect();
        let mut cfg = config();
        cfg.t0 = 400.0;
        let sol = solve_frame(&pts, 2, 0.0, &cfg, 11).unwrap();
        let mut ys = sol.controllers.clone();
        ys.sort_by(|p, q| p.coords[0].partial_cmp(&q.coords[0]).unwrap());
        assert!(ys[0].dist(&Point::new(mean(&a))) < 1e-3);
        assert!(ys[1].dist(&Point::new(mean(&b))) < 1e-3);
    }

    #[test]
    fn level_descends_at_zero_gamma() {
        let mut pts = blob(4, &[-0.5, -0.5], 40, 0.2);
        pts.extend(blob(5, &[0.5, 0.4], 40, 0.2));
        pts.extend(blob(6, &[0.4, -0.6], 40, 0.2));
        let mut r = rng::stream(8, 1);
        let start: Vec<Point<f64>> =
            (0..3).map(|_| Point::new(vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)])).collect();
        for t in [2.0, 0.3, 0.05, 1e-3] {
            let out = anneal_level(&pts, start.clone(), t, 0.0, 1e-10, 200).unwrap();
            for w in out.free_energy.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn hard_limit_consistency_and_determinism() {
        let mut pts = blob(7, &[-0.5, 0.5], 50, 0.15);
        pts.extend(blob(8, &[0.5, 0.5], 50, 0.15));
        pts.extend(blob(9, &[0.0, -0.5], 50, 0.15));
        let sol = solve_frame(&pts, 3, 0.1, &config(), 21).unwrap();
        let again = solve_frame(&pts, 3, 0.1, &config(), 21).unwrap();
        assert_eq!(sol.controllers, again.controllers);
        assert!(sol.iterations <= config().max_inner_iters * sol.levels);
        let labels = sol.assoc.argmax();
        for (x, &l) in pts.iter().zip(&labels) {
            let d: Vec<f64> = sol.controllers.iter().map(|y| distortion(x, y, &sol.controllers, 0.1)).collect();
            let best = (0..3).min_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap()).unwrap();
            assert_eq!(l, best);
        }
    }

    #[test]
    fn static_network_frames_agree() {
        let mut pts = blob(10, &[-0.5, 0.0], 30, 0.2);
        pts.extend(blob(11, &[0.5, 0.0], 30, 0.2));
        let sc = Scenario {
            mobility: MobilitySpec::stationary(&pts).unwrap(),
            num_controllers: 2,
            gamma: 0.0,
            k0: 1.0,
            t0_temperature: 16.0,
            alpha: 0.9,
            horizon: 1.0,
            steps: 4,
            seed: 5,
        };
        let trace = run_frame_by_frame(&sc, &config()).unwrap();
        assert_eq!(trace.rows.len(), 4);
        for r in &trace.rows[1..] {
            for (a, b) in r.controllers.iter().flatten().zip(trace.rows[0].controllers.iter().flatten()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
        let warm = run_frame_by_frame(&sc, &FrameSolverConfig { warm_start: true, ..config() }).unwrap();
        assert_eq!(warm.rows.len(), 4);
    }

    #[test]
    fn level_count() {
        let cfg = FrameSolverConfig { t0: 1.0, alpha: 0.5, t_min: 0.125, ..config() };
        assert_eq!(cfg.num_levels(), 4);
    }
}
