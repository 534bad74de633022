//! Output artifacts: solver-effort tables and SVG scatter plots of fronts.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nlsolver::RunCounters;
use crate::regression::ComparisonRow;
use crate::scalar::Scalar;

/// Total effort of one routine over all of its solves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub routine: String,
    pub iterations: u64,
    pub function_evals: u64,
    pub gradient_evals: u64,
}

impl EfficiencyRow {
    pub fn new(routine: impl Into<String>, c: RunCounters) -> Self {
        Self {
            routine: routine.into(),
            iterations: c.iterations,
            function_evals: c.function_evals,
            gradient_evals: c.gradient_evals,
        }
    }
}

pub fn write_efficiency_csv<W: Write>(rows: &[EfficiencyRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

pub fn read_efficiency_csv<R: std::io::Read>(reader: R) -> Result<Vec<EfficiencyRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Csv(e.to_string()))
}

pub const COMPARISON_HEADER: [&str; 14] = [
    "run", "vc", "fz", "t", "ra", "ra_a", "ra_b", "apd_ra_a", "apd_ra_b", "mrr", "mrr_a", "mrr_b", "apd_mrr_a",
    "apd_mrr_b",
];

/// Measured responses beside both model pairs' predictions and deviations,
/// one row per experiment run numbered from 1.
pub fn write_comparison_csv<T: Scalar, W: Write>(rows: &[ComparisonRow<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(COMPARISON_HEADER).map_err(err)?;
    for (i, r) in rows.iter().enumerate() {
        let rec = &r.record;
        let cells = [
            rec.vc, rec.fz, rec.t, rec.ra, r.a_ra, r.b_ra, r.apd_a_ra, r.apd_b_ra, rec.mrr, r.a_mrr, r.b_mrr,
            r.apd_a_mrr, r.apd_b_mrr,
        ];
        let mut line = vec![(i + 1).to_string()];
        line.extend(cells.iter().map(|c| c.to_string()));
        w.write_record(&line).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

/// One labelled point cloud of a scatter plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub const SVG_WIDTH: f64 = 800.0;
pub const SVG_HEIGHT: f64 = 600.0;

const PLOT_LEFT: f64 = 90.0;
const PLOT_RIGHT: f64 = 170.0;
const PLOT_TOP: f64 = 50.0;
const PLOT_BOTTOM: f64 = 70.0;

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Data range widened by 5% on both sides; a flat range gets a unit pad.
fn padded(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span == 0.0 {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn marker(out: &mut String, shape: usize, x: f64, y: f64, color: &str) {
    let r = 5.0;
    let _ = match shape % 6 {
        0 => writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="none" stroke="{color}" stroke-width="1.5"/>"#),
        1 => writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{}" height="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            x - r,
            y - r,
            2.0 * r,
            2.0 * r
        ),
        2 => writeln!(
            out,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            x,
            y - r,
            x - r,
            y + r,
            x + r,
            y + r
        ),
        3 => writeln!(
            out,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            x,
            y - r,
            x + r,
            y,
            x,
            y + r,
            x - r,
            y
        ),
        4 => writeln!(
            out,
            r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{color}" stroke-width="1.5"/>"#,
            x - r,
            y - r,
            x + r,
            y + r,
            x - r,
            y + r,
            x + r,
            y - r
        ),
        _ => writeln!(
            out,
            r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{color}" stroke-width="1.5"/>"#,
            x - r,
            y,
            x + r,
            y,
            x,
            y - r,
            x,
            y + r
        ),
    };
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64, span: f64) -> String {
    let decimals = if span >= 100.0 {
        0
    } else if span >= 1.0 {
        2
    } else {
        4
    };
    format!("{v:.decimals$}")
}

/// Scatter plot on a fixed 800×600 canvas with linear axes fitted to the data.
/// Each series gets its own marker shape and color, in series order.
pub fn scatter_svg(series: &[Series], x_label: &str, y_label: &str, title: &str) -> String {
    let (x0, x1) = padded(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = padded(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pw = SVG_WIDTH - PLOT_LEFT - PLOT_RIGHT;
    let ph = SVG_HEIGHT - PLOT_TOP - PLOT_BOTTOM;
    let sx = |x: f64| PLOT_LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| PLOT_TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        PLOT_LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{PLOT_LEFT}" y="{PLOT_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let base = PLOT_TOP + ph;
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{base:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, base + 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            base + 20.0,
            tick_label(xv, x1 - x0)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{PLOT_LEFT:.2}" y2="{py:.2}" stroke="black"/>"#,
            PLOT_LEFT - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            PLOT_LEFT - 8.0,
            py + 4.0,
            tick_label(yv, y1 - y0)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        PLOT_LEFT + pw / 2.0,
        SVG_HEIGHT - 20.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        PLOT_TOP + ph / 2.0,
        PLOT_TOP + ph / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(out, r#"<g class="series" data-label="{}">"#, escape(&s.label));
        for &(x, y) in &s.points {
            marker(&mut out, i, sx(x), sy(y), color);
        }
        let _ = writeln!(out, "</g>");
        let ly = PLOT_TOP + 10.0 + 22.0 * i as f64;
        let lx = SVG_WIDTH - PLOT_RIGHT + 20.0;
        marker(&mut out, i, lx, ly, color);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 12.0, ly + 4.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}
