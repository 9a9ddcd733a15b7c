//! Side-by-side runs of the real-time controller and the frame-by-frame
//! baseline on one scenario.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::{run_frame_by_frame, FrameSolverConfig};
use crate::error::{Error, Result};
use crate::metrics::{total_delay, tracking_error_rows};
use crate::model::{node_positions, NetworkState, Point};
use crate::plot::emit_plot;
use crate::rcp::{run_rcp, AnnealSchedule, ControllerGains};
use crate::scalar::Scalar;
use crate::scenario::Scenario;
use crate::trace::{emit_csv, fmt_real, write_text, RunTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub mean_us: f64,
    pub std_us: f64,
    pub min_us: f64,
    pub q1_us: f64,
    pub median_us: f64,
    pub q3_us: f64,
    pub max_us: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl TimingStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len().max(1) as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        TimingStats {
            mean_us: mean,
            std_us: var.sqrt(),
            min_us: quantile(&sorted, 0.0),
            q1_us: quantile(&sorted, 0.25),
            median_us: quantile(&sorted, 0.5),
            q3_us: quantile(&sorted, 0.75),
            max_us: quantile(&sorted, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub step: usize,
    pub t: f64,
    /// Matched distance from the real-time placement to the frame solution.
    pub tracking_error: f64,
    pub rcp_delay: f64,
    pub frame_delay: f64,
    pub rcp_wall_us: f64,
    pub frame_wall_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub num_nodes: usize,
    pub num_controllers: usize,
    pub steps: usize,
    pub rcp_timing: TimingStats,
    pub frame_timing: TimingStats,
    /// Mean frame time over mean real-time step time; absent when wall times are zeroed.
    pub speedup: Option<f64>,
    pub series: Vec<ComparisonRow>,
}

impl ComparisonReport {
    /// Mean of `f` over rows whose step falls in `[lo, hi)` as fractions of the run.
    pub fn window_mean(&self, lo: f64, hi: f64, f: impl Fn(&ComparisonRow) -> f64) -> f64 {
        let n = self.series.len();
        let a = (lo * n as f64).floor() as usize;
        let b = ((hi * n as f64).ceil() as usize).min(n).max(a + 1);
        self.series[a..b].iter().map(&f).sum::<f64>() / (b - a) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rcp: RunTrace,
    pub frame: RunTrace,
    pub report: ComparisonReport,
}

fn build_report<S: Scalar>(scenario: &Scenario<S>, rcp: &RunTrace, frame: &RunTrace) -> Result<ComparisonReport> {
    let gamma = scenario.gamma.as_f64();
    let to_points = |rows: &[Vec<f64>]| rows.iter().map(|c| Point::new(c.clone())).collect::<Vec<Point<f64>>>();
    let mut series = Vec::with_capacity(rcp.rows.len());
    for (a, b) in rcp.rows.iter().zip(&frame.rows) {
        let nodes: Vec<Point<f64>> = node_positions(&scenario.mobility, S::lit(a.t)).iter().map(Point::cast).collect();
        let rs = NetworkState { t: a.t, nodes: nodes.clone(), controllers: to_points(&a.controllers) };
        let fs = NetworkState { t: a.t, nodes, controllers: to_points(&b.controllers) };
        series.push(ComparisonRow {
            step: a.step,
            t: a.t,
            tracking_error: tracking_error_rows(&a.controllers, &b.controllers)?,
            rcp_delay: total_delay(&rs, gamma),
            frame_delay: total_delay(&fs, gamma),
            rcp_wall_us: a.wall_us,
            frame_wall_us: b.wall_us,
        });
    }
    let rcp_timing = TimingStats::from_samples(&rcp.wall_times_us());
    let frame_timing = TimingStats::from_samples(&frame.wall_times_us());
    let speedup = (rcp_timing.mean_us > 0.0).then(|| frame_timing.mean_us / rcp_timing.mean_us);
    Ok(ComparisonReport {
        num_nodes: scenario.num_nodes(),
        num_controllers: scenario.num_controllers,
        steps: scenario.steps,
        rcp_timing,
        frame_timing,
        speedup,
        series,
    })
}

/// Runs both algorithms back to back on the same thread and aligns their traces by step.
pub fn compare_runs<S: Scalar>(
    scenario: &Scenario<S>,
    gains: &ControllerGains<S>,
    schedule: &AnnealSchedule<S>,
    frame_config: &FrameSolverConfig<S>,
) -> Result<Comparison> {
    let rcp = run_rcp(scenario, gains, schedule)?;
    let frame = run_frame_by_frame(scenario, frame_config)?;
    let report = build_report(scenario, &rcp, &frame)?;
    Ok(Comparison { rcp, frame, report })
}

impl Comparison {
    /// Zeroes every wall-time field so outputs are byte-reproducible.
    pub fn zero_walltime(&mut self) {
        self.rcp.zero_walltime();
        self.frame.zero_walltime();
        for r in &mut self.report.series {
            r.rcp_wall_us = 0.0;
            r.frame_wall_us = 0.0;
        }
        self.report.rcp_timing = TimingStats::from_samples(&self.rcp.wall_times_us());
        self.report.frame_timing = TimingStats::from_samples(&self.frame.wall_times_us());
        self.report.speedup = None;
    }

    pub fn series_csv(&self) -> String {
        let mut s = String::from("step,t,tracking_error,rcp_delay,frame_delay,rcp_wall_us,frame_wall_us\n");
        for r in &self.report.series {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.step,
                fmt_real(r.t),
                fmt_real(r.tracking_error),
                fmt_real(r.rcp_delay),
                fmt_real(r.frame_delay),
                fmt_real(r.rcp_wall_us),
                fmt_real(r.frame_wall_us)
            ));
        }
        s
    }

    /// Writes `rcp.csv`, `frame.csv` (each with a header sidecar),
    /// `comparison.csv`, `report.json` and `compare.svg` into `dir`.
    pub fn emit(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;
        emit_csv(&self.rcp, &dir.join("rcp.csv"))?;
        emit_csv(&self.frame, &dir.join("frame.csv"))?;
        write_text(&dir.join("comparison.csv"), &self.series_csv())?;
        let mut report = serde_json::to_string_pretty(&self.report).expect("report serializes");
        report.push('\n');
        write_text(&dir.join("report.json"), &report)?;
        emit_plot(&[self.rcp.clone(), self.frame.clone()], &dir.join("compare.svg"))
    }
}
