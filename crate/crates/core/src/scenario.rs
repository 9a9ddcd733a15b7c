//! Scenario files and the moving-Gaussian-cluster scenario generator.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fit_domain, normalize, MobilitySpec, NodeMotion, Point};
use crate::rng;
use crate::scalar::Scalar;

/// One node entry in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub rate: f64,
}

/// On-disk scenario document. Field names are part of the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dimension: usize,
    pub nodes: Vec<NodeEntry>,
    pub num_controllers: usize,
    pub gamma: f64,
    pub k0: f64,
    pub t0_temperature: f64,
    pub alpha: f64,
    pub horizon: f64,
    pub steps: usize,
    pub seed: u64,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::from_json(&text).map_err(|source| Error::Json { path: path.into(), source })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|source| Error::Io { path: path.into(), source })
    }
}

/// Validated, in-memory scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<S> {
    pub mobility: MobilitySpec<S>,
    pub num_controllers: usize,
    pub gamma: S,
    pub k0: S,
    pub t0_temperature: S,
    pub alpha: S,
    pub horizon: S,
    pub steps: usize,
    pub seed: u64,
}

impl<S: Scalar> Scenario<S> {
    pub fn from_file(file: &ScenarioFile) -> Result<Self> {
        let d = file.dimension;
        if d == 0 {
            return Err(Error::config("dimension must be at least 1"));
        }
        let mut motions = Vec::with_capacity(file.nodes.len());
        for (i, n) in file.nodes.iter().enumerate() {
            if n.start.len() != d || n.end.len() != d {
                return Err(Error::config(format!("node {i}: expected {d} coordinates in start and end")));
            }
            motions.push(NodeMotion {
                start: Point::from_f64(&n.start),
                end: Point::from_f64(&n.end),
                rate: S::lit(n.rate),
            });
        }
        let scenario = Scenario {
            mobility: MobilitySpec::new(motions)?,
            num_controllers: file.num_controllers,
            gamma: S::lit(file.gamma),
            k0: S::lit(file.k0),
            t0_temperature: S::lit(file.t0_temperature),
            alpha: S::lit(file.alpha),
            horizon: S::lit(file.horizon),
            steps: file.steps,
            seed: file.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            dimension: self.dim(),
            nodes: self
                .mobility
                .motions()
                .iter()
                .map(|m| NodeEntry {
                    start: m.start.coords.iter().map(|c| c.as_f64()).collect(),
                    end: m.end.coords.iter().map(|c| c.as_f64()).collect(),
                    rate: m.rate.as_f64(),
                })
                .collect(),
            num_controllers: self.num_controllers,
            gamma: self.gamma.as_f64(),
            k0: self.k0.as_f64(),
            t0_temperature: self.t0_temperature.as_f64(),
            alpha: self.alpha.as_f64(),
            horizon: self.horizon.as_f64(),
            steps: self.steps,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mobility.len();
        let m = self.num_controllers;
        if m == 0 || m > n {
            return Err(Error::config(format!("num_controllers must be in 1..={n} (got {m})")));
        }
        let positive = |name: &str, v: S| {
            if v > S::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be positive and finite (got {v})")))
            }
        };
        positive("k0", self.k0)?;
        positive("t0_temperature", self.t0_temperature)?;
        positive("horizon", self.horizon)?;
        if !(self.gamma >= S::zero()) || !self.gamma.is_finite() {
            return Err(Error::config(format!("gamma must be nonnegative (got {})", self.gamma)));
        }
        if !(self.alpha > S::zero() && self.alpha < S::one()) {
            return Err(Error::config(format!("alpha must lie in (0, 1) (got {})", self.alpha)));
        }
        if self.steps == 0 {
            return Err(Error::config("steps must be at least 1"));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.mobility.len()
    }

    pub fn dim(&self) -> usize {
        self.mobility.dim()
    }

    /// Fixed integration step `horizon / steps`.
    pub fn dt(&self) -> S {
        self.horizon / S::from_usize_lossy(self.steps)
    }

    /// Time of the `i`-th step (0-based): `i * dt`.
    pub fn time_at(&self, i: usize) -> S {
        S::from_usize_lossy(i) * self.dt()
    }

    pub fn start_points(&self) -> Vec<Point<S>> {
        self.mobility.motions().iter().map(|m| m.start.clone()).collect()
    }
}

/// Default starting temperature for dimension `d`: twice the largest squared
/// distance inside `[-1, 1]^d`.
pub fn default_t0(dimension: usize) -> f64 {
    8.0 * dimension as f64
}

/// Inverse-CDF Rayleigh sample: `sigma * sqrt(-2 ln(1 - u))` for `u` in `[0, 1)`.
pub fn rayleigh_inverse_cdf(sigma: f64, u: f64) -> f64 {
    sigma * (-2.0 * (1.0 - u).ln()).sqrt()
}

pub fn sample_rayleigh<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    rayleigh_inverse_cdf(sigma, rng.random::<f64>())
}

/// Parameters for [`generate_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGenConfig {
    pub dimension: usize,
    pub num_clusters: usize,
    pub nodes_per_cluster: usize,
    /// Mean Gaussian standard deviation of a cluster, in raw (pre-normalization) units.
    pub cluster_spread: f64,
    /// Half side of the raw region cluster means are drawn from.
    pub region: f64,
    pub rayleigh_sigma: f64,
    pub num_controllers: usize,
    pub seed: u64,
    pub horizon: f64,
    pub steps: usize,
    pub gamma: f64,
    /// Gain; `None` picks `0.5 / (N * dt)`.
    pub k0: Option<f64>,
    pub alpha: f64,
    /// Starting temperature; `None` uses [`default_t0`].
    pub t0: Option<f64>,
}

impl Default for ScenarioGenConfig {
    fn default() -> Self {
        ScenarioGenConfig {
            dimension: 2,
            num_clusters: 4,
            nodes_per_cluster: 25,
            cluster_spread: 1.0,
            region: 10.0,
            rayleigh_sigma: 0.5,
            num_controllers: 4,
            seed: 0,
            horizon: 10.0,
            steps: 200,
            gamma: 0.0,
            k0: None,
            alpha: 0.95,
            t0: None,
        }
    }
}

impl ScenarioGenConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.num_clusters * self.nodes_per_cluster;
        if self.dimension == 0 {
            return Err(Error::config("dimension must be at least 1"));
        }
        if self.num_controllers == 0 || n < self.num_controllers {
            return Err(Error::config(format!(
                "num_clusters * nodes_per_cluster ({n}) must be >= num_controllers ({}) >= 1",
                self.num_controllers
            )));
        }
        for (name, v) in [
            ("cluster_spread", self.cluster_spread),
            ("region", self.region),
            ("rayleigh_sigma", self.rayleigh_sigma),
            ("horizon", self.horizon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive and finite (got {v})")));
            }
        }
        if self.steps == 0 {
            return Err(Error::config("steps must be at least 1"));
        }
        Ok(())
    }
}

fn sample_cluster<R: Rng>(rng: &mut R, mean: &[f64], std: f64, count: usize) -> Vec<Point<f64>> {
    (0..count)
        .map(|_| Point::new(mean.iter().map(|&mu| mu + std * rng.sample::<f64, _>(StandardNormal)).collect()))
        .collect()
}

/// Samples moving Gaussian clusters: every start cluster drifts toward an
/// equally sized destination cluster, each node toward a random point of it.
/// All coordinates are normalized into `[-1, 1]^d`.
pub fn generate_scenario(config: &ScenarioGenConfig) -> Result<ScenarioFile> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, rng::STREAM_SCENARIO);
    let d = config.dimension;
    let random_mean = |rng: &mut rng::SeededRng| -> Vec<f64> {
        (0..d).map(|_| rng.random_range(-config.region..config.region)).collect()
    };

    let mut starts = Vec::new();
    let mut ends = Vec::new();
    for _ in 0..config.num_clusters {
        let src_mean = random_mean(&mut rng);
        let dst_mean = random_mean(&mut rng);
        let src_std = config.cluster_spread * rng.random_range(0.5..1.5);
        let dst_std = config.cluster_spread * rng.random_range(0.5..1.5);
        let src = sample_cluster(&mut rng, &src_mean, src_std, config.nodes_per_cluster);
        let mut dst = sample_cluster(&mut rng, &dst_mean, dst_std, config.nodes_per_cluster);
        dst.shuffle(&mut rng);
        starts.extend(src);
        ends.extend(dst);
    }
    let rates: Vec<f64> = (0..starts.len()).map(|_| sample_rayleigh(&mut rng, config.rayleigh_sigma)).collect();

    let domain = fit_domain(starts.iter().chain(&ends))?;
    let nodes: Vec<NodeEntry> = starts
        .iter()
        .zip(&ends)
        .zip(&rates)
        .map(|((s, e), &rate)| NodeEntry {
            start: clamp_unit(normalize(&domain, s).coords),
            end: clamp_unit(normalize(&domain, e).coords),
            rate,
        })
        .collect();

    let n = nodes.len();
    let dt = config.horizon / config.steps as f64;
    Ok(ScenarioFile {
        dimension: d,
        nodes,
        num_controllers: config.num_controllers,
        gamma: config.gamma,
        k0: config.k0.unwrap_or(0.5 / (n as f64 * dt)),
        t0_temperature: config.t0.unwrap_or_else(|| default_t0(d)),
        alpha: config.alpha,
        horizon: config.horizon,
        steps: config.steps,
        seed: config.seed,
    })
}

// Rounding in (p - mu) / s can land a hair outside the unit box.
fn clamp_unit(mut c: Vec<f64>) -> Vec<f64> {
    for v in &mut c {
        *v = v.clamp(-1.0, 1.0);
    }
    c
}
