//! Per-step run records and their CSV encoding.
//!
//! Columns: `step,t,temperature,d1,d2,entropy,free_energy,tracking_error,wall_us`
//! followed by `y<j>_<axis>` for every controller and axis. Reals are written
//! with 17 significant digits, lines end with `\n`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BASE_COLUMNS: [&str; 9] =
    ["step", "t", "temperature", "d1", "d2", "entropy", "free_energy", "tracking_error", "wall_us"];

/// Configuration echo attached to every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub algorithm: String,
    pub num_nodes: usize,
    pub num_controllers: usize,
    pub dimension: usize,
    pub steps: usize,
    pub horizon: f64,
    pub seed: u64,
    pub gamma: f64,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub temperature: f64,
    pub d1: f64,
    pub d2: f64,
    pub entropy: f64,
    pub free_energy: f64,
    pub tracking_error: f64,
    pub wall_us: f64,
    pub controllers: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub header: TraceHeader,
    pub rows: Vec<TraceRow>,
}

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

impl RunTrace {
    pub fn column_names(num_controllers: usize, dim: usize) -> Vec<String> {
        let mut cols: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
        for j in 0..num_controllers {
            for a in 0..dim {
                cols.push(format!("y{j}_{a}"));
            }
        }
        cols
    }

    pub fn zero_walltime(&mut self) {
        for r in &mut self.rows {
            r.wall_us = 0.0;
        }
    }

    pub fn wall_times_us(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.wall_us).collect()
    }

    pub fn final_controllers(&self) -> Option<&[Vec<f64>]> {
        self.rows.last().map(|r| r.controllers.as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(Self::column_names(self.header.num_controllers, self.header.dimension))
            .expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![
                r.step.to_string(),
                fmt_real(r.t),
                fmt_real(r.temperature),
                fmt_real(r.d1),
                fmt_real(r.d2),
                fmt_real(r.entropy),
                fmt_real(r.free_energy),
                fmt_real(r.tracking_error),
                fmt_real(r.wall_us),
            ];
            rec.extend(r.controllers.iter().flatten().map(|&v| fmt_real(v)));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }

    /// Parses rows from CSV text; the header echo is not part of the CSV and
    /// comes back with only the counts filled in.
    pub fn from_csv(text: &str) -> Result<RunTrace> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::MalformedTrace(e.to_string()))?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names.len() < BASE_COLUMNS.len() || names[..BASE_COLUMNS.len()] != BASE_COLUMNS {
            return Err(Error::MalformedTrace("unexpected base columns".into()));
        }
        let extra = &names[BASE_COLUMNS.len()..];
        let dim = extra.iter().take_while(|n| n.starts_with("y0_")).count();
        if (dim == 0 && !extra.is_empty()) || (dim > 0 && !extra.len().is_multiple_of(dim)) {
            return Err(Error::MalformedTrace("controller columns are ragged".into()));
        }
        let m = extra.len().checked_div(dim).unwrap_or(0);
        if RunTrace::column_names(m, dim) != names {
            return Err(Error::MalformedTrace("controller column names out of order".into()));
        }

        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::MalformedTrace(format!("{s:?}: {e}")));
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::MalformedTrace(e.to_string()))?;
            let f: Vec<&str> = rec.iter().collect();
            let step = f[0].parse::<usize>().map_err(|e| Error::MalformedTrace(e.to_string()))?;
            let mut controllers = Vec::with_capacity(m);
            for j in 0..m {
                let base = BASE_COLUMNS.len() + j * dim;
                controllers.push(f[base..base + dim].iter().map(|s| num(s)).collect::<Result<_>>()?);
            }
            rows.push(TraceRow {
                step,
                t: num(f[1])?,
                temperature: num(f[2])?,
                d1: num(f[3])?,
                d2: num(f[4])?,
                entropy: num(f[5])?,
                free_energy: num(f[6])?,
                tracking_error: num(f[7])?,
                wall_us: num(f[8])?,
                controllers,
            });
        }
        let header = TraceHeader {
            algorithm: String::new(),
            num_nodes: 0,
            num_controllers: m,
            dimension: dim,
            steps: rows.len(),
            horizon: 0.0,
            seed: 0,
            gamma: 0.0,
            params: BTreeMap::new(),
        };
        Ok(RunTrace { header, rows })
    }
}

/// Sidecar path holding the JSON header echo for a CSV trace.
pub fn header_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("header.json")
}

/// Writes the CSV and its header sidecar.
pub fn emit_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    write_text(path, &trace.to_csv())?;
    let mut header = serde_json::to_string_pretty(&trace.header).expect("header serializes");
    header.push('\n');
    write_text(&header_path(path), &header)
}

/// Reads a CSV trace, attaching the header sidecar when present.
pub fn read_csv(path: &Path) -> Result<RunTrace> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let mut trace = RunTrace::from_csv(&text)?;
    let hp = header_path(path);
    if hp.exists() {
        let h = fs::read_to_string(&hp).map_err(|source| Error::Io { path: hp.clone(), source })?;
        trace.header = serde_json::from_str(&h).map_err(|source| Error::Json { path: hp, source })?;
    }
    Ok(trace)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_trace(n: usize) -> RunTrace {
        let header = TraceHeader {
            algorithm: "rcp".into(),
            num_nodes: 10,
            num_controllers: 2,
            dimension: 2,
            steps: n,
            horizon: 1.0,
            seed: 3,
            gamma: 0.1,
            params: BTreeMap::from([("k0".to_string(), 0.5)]),
        };
        let rows = (0..n)
            .map(|i| {
                let x = i as f64;
                TraceRow {
                    step: i,
                    t: x * 0.1,
                    temperature: 16.0 * 0.9f64.powi(i as i32),
                    d1: 1.0 / (1.0 + x),
                    d2: 0.3,
                    entropy: std::f64::consts::LN_2,
                    free_energy: -1.0 / 3.0,
                    tracking_error: 1e-300,
                    wall_us: 12.5,
                    controllers: vec![vec![x.sin(), -0.1], vec![0.2, x.cos()]],
                }
            })
            .collect();
        RunTrace { header, rows }
    }

    #[test]
    fn csv_shape() {
        let csv = sample_trace(7).to_csv();
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines.len(), 7 + 2); // header, rows, trailing empty
        assert_eq!(lines.last(), Some(&""));
        assert!(!csv.contains('\r'));
        assert_eq!(lines[0], "step,t,temperature,d1,d2,entropy,free_energy,tracking_error,wall_us,y0_0,y0_1,y1_0,y1_1");
        assert!(lines[1].starts_with("0,0.0000000000000000e0,1.6000000000000000e1,"));
    }

    #[test]
    fn csv_roundtrip_is_byte_identical() {
        let trace = sample_trace(25);
        let text = trace.to_csv();
        let parsed = RunTrace::from_csv(&text).unwrap();
        assert_eq!(parsed.rows, trace.rows);
        assert_eq!(parsed.to_csv(), text);
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(RunTrace::from_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn emit_reports_path_on_failure() {
        let err = emit_csv(&sample_trace(1), Path::new("/nonexistent-dir/x/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x/out.csv"));
    }
}
