//! Minimal deterministic SVG rendering of run traces.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::trace::{write_text, RunTrace};

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];
const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 45.0;

struct Series {
    label: String,
    color: &'static str,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite()) {
        b.0 = b.0.min(*x);
        b.1 = b.1.max(*x);
        b.2 = b.2.min(*y);
        b.3 = b.3.max(*y);
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if b.1 - b.0 < 1e-12 {
        b.0 -= 0.5;
        b.1 += 0.5;
    }
    if b.3 - b.2 < 1e-12 {
        b.2 -= 0.5;
        b.3 += 0.5;
    }
    b
}

fn panel(out: &mut String, ox: f64, oy: f64, title: &str, xlabel: &str, series: &[Series]) {
    let (x0, x1, y0, y1) = bounds(series);
    let pw = PANEL_W - 2.0 * MARGIN;
    let ph = PANEL_H - 2.0 * MARGIN;
    let sx = |x: f64| ox + MARGIN + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| oy + PANEL_H - MARGIN - (y - y0) / (y1 - y0) * ph;

    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444"/>"##,
        ox + MARGIN,
        oy + MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
        ox + PANEL_W / 2.0,
        oy + MARGIN - 12.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
        ox + PANEL_W / 2.0,
        oy + PANEL_H - 8.0,
        escape(xlabel)
    );
    for (v, x, y, anchor) in [
        (x0, sx(x0), oy + PANEL_H - MARGIN + 12.0, "start"),
        (x1, sx(x1), oy + PANEL_H - MARGIN + 12.0, "end"),
        (y0, ox + MARGIN - 4.0, sy(y0), "end"),
        (y1, ox + MARGIN - 4.0, sy(y1) + 8.0, "end"),
    ] {
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{y:.2}" font-size="9" text-anchor="{anchor}">{v:.3e}</text>"#);
    }
    for (k, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let dash = if s.dashed { r#" stroke-dasharray="4,3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.2"{dash}/>"#,
            pts.join(" "),
            s.color
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="9" fill="{}">{}</text>"#,
            ox + MARGIN + 6.0,
            oy + MARGIN + 12.0 + 11.0 * k as f64,
            s.color,
            escape(&s.label)
        );
    }
}

fn label(trace: &RunTrace, index: usize) -> String {
    if trace.header.algorithm.is_empty() {
        format!("trace{index}")
    } else {
        format!("{}#{index}", trace.header.algorithm)
    }
}

/// Renders controller trajectories, tracking error, delay and per-step wall
/// time of every trace into one SVG document.
pub fn render_svg(traces: &[RunTrace]) -> String {
    let mut traj = Vec::new();
    let mut err = Vec::new();
    let mut delay = Vec::new();
    let mut wall = Vec::new();
    for (k, tr) in traces.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let name = label(tr, k);
        let m = tr.rows.first().map_or(0, |r| r.controllers.len());
        for j in 0..m {
            let points = tr
                .rows
                .iter()
                .map(|r| {
                    let c = &r.controllers[j];
                    if c.len() >= 2 {
                        (c[0], c[1])
                    } else {
                        (r.t, c[0])
                    }
                })
                .collect();
            traj.push(Series { label: format!("{name} y{j}"), color, points, dashed: k % 2 == 1 });
        }
        err.push(Series {
            label: name.clone(),
            color,
            points: tr.rows.iter().map(|r| (r.t, r.tracking_error)).collect(),
            dashed: false,
        });
        let g = tr.header.gamma;
        delay.push(Series {
            label: name.clone(),
            color,
            points: tr.rows.iter().map(|r| (r.t, r.d1 + g * r.d2)).collect(),
            dashed: false,
        });
        wall.push(Series {
            label: name,
            color,
            points: tr.rows.iter().map(|r| (r.step as f64, r.wall_us)).collect(),
            dashed: false,
        });
    }

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        2.0 * PANEL_W,
        2.0 * PANEL_H,
        2.0 * PANEL_W,
        2.0 * PANEL_H
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    panel(&mut out, 0.0, 0.0, "controller trajectories", "axis 0 (or t)", &traj);
    panel(&mut out, PANEL_W, 0.0, "tracking error", "t", &err);
    panel(&mut out, 0.0, PANEL_H, "delay D1 + gamma D2", "t", &delay);
    panel(&mut out, PANEL_W, PANEL_H, "wall time per step (us)", "step", &wall);
    let _ = writeln!(out, "</svg>");
    out
}

pub fn emit_plot(traces: &[RunTrace], path: &Path) -> Result<()> {
    write_text(path, &render_svg(traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{TraceHeader, TraceRow};
    use std::collections::BTreeMap;

    fn trace(alg: &str, n: usize) -> RunTrace {
        RunTrace {
            header: TraceHeader {
                algorithm: alg.into(),
                num_nodes: 3,
                num_controllers: 2,
                dimension: 2,
                steps: n,
                horizon: 1.0,
                seed: 0,
                gamma: 0.1,
                params: BTreeMap::new(),
            },
            rows: (0..n)
                .map(|i| TraceRow {
                    step: i,
                    t: i as f64,
                    temperature: 1.0,
                    d1: 1.0 / (1.0 + i as f64),
                    d2: 0.5,
                    entropy: 0.1,
                    free_energy: 0.0,
                    tracking_error: (-(i as f64)).exp(),
                    wall_us: 3.0,
                    controllers: vec![vec![i as f64 * 0.1, 0.0], vec![0.0, -(i as f64) * 0.1]],
                })
                .collect(),
        }
    }

    #[test]
    fn svg_is_well_formed_and_deterministic() {
        let traces = [trace("rcp", 20), trace("frame<&>", 20)];
        let svg = render_svg(&traces);
        let doc = roxmltree::Document::parse(&svg).expect("well-formed xml");
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count() >= 8);
        assert_eq!(svg, render_svg(&traces));
    }

    #[test]
    fn empty_input_still_renders() {
        let svg = render_svg(&[]);
        roxmltree::Document::parse(&svg).unwrap();
    }
}
