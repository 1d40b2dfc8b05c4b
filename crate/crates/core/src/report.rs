//! CSV tables, Matrix Market export and a small SVG writer for line plots
//! and heatmaps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::discrete_ops::{DiscreteOperators, SpectralBasis};
use crate::linalg::Csr;
use crate::Result;

/// Floats with 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// A table with a header row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// One CSV cell.
pub enum Cell<'a> {
    F(f64),
    I(i64),
    S(&'a str),
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: &[Cell<'_>]) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(
            row.iter()
                .map(|c| match c {
                    Cell::F(v) => fmt_f64(*v),
                    Cell::I(v) => v.to_string(),
                    Cell::S(v) => v.to_string(),
                })
                .collect(),
        );
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// `(node, x, [y,] value)` rows for a nodal field.
pub fn nodal_csv(ops: &DiscreteOperators, name: &str, values: &[f64]) -> Csv {
    let mut header = vec!["node", "x"];
    if ops.dim() == 2 {
        header.push("y");
    }
    header.push(name);
    let mut csv = Csv::new(&header);
    for (i, (p, v)) in ops.nodes.iter().zip(values).enumerate() {
        let mut row = vec![Cell::I(i as i64), Cell::F(p[0])];
        if ops.dim() == 2 {
            row.push(Cell::F(p[1]));
        }
        row.push(Cell::F(*v));
        csv.push(&row);
    }
    csv
}

/// Matrix Market coordinate format, general real, 1-based indices.
pub fn matrix_market(a: &Csr) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", a.nrows, a.ncols, a.nnz());
    for i in 0..a.nrows {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let _ = writeln!(out, "{} {} {}", i + 1, a.col_idx[k] + 1, fmt_f64(a.vals[k]));
        }
    }
    out
}

/// Diagonal matrix in the same format.
pub fn diagonal_market(d: &[f64]) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", d.len(), d.len(), d.len());
    for (i, v) in d.iter().enumerate() {
        let _ = writeln!(out, "{} {} {}", i + 1, i + 1, fmt_f64(*v));
    }
    out
}

pub fn spectrum_csv(basis: &SpectralBasis) -> Csv {
    let mut csv = Csv::new(&["k", "lambda"]);
    for (k, l) in basis.values.iter().enumerate() {
        csv.push(&[Cell::I(k as i64 + 1), Cell::F(*l)]);
    }
    csv
}

/// A polyline series of a plot.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in it.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn axes(s: &mut String, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) {
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} L{PAD} {b} L{r} {b}" stroke="black" fill="none" stroke-width="1"/>"#,
        b = H - PAD,
        r = W - PAD / 2.0
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let px = PAD + t * (W - 1.5 * PAD);
        let py = H - PAD - t * (H - 2.0 * PAD);
        let _ = writeln!(
            s,
            r#"<text x="{px:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{:.3}</text>"#,
            H - PAD + 16.0,
            x0 + t * (x1 - x0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{:.3e}</text>"#,
            PAD - 4.0,
            py + 3.0,
            y0 + t * (y1 - y0)
        );
    }
}

/// Line plot; `markers` are x-positions drawn as dashed vertical lines.
pub fn line_plot(title: &str, series: &[Series], markers: &[f64]) -> String {
    let xb = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).chain(markers.iter().copied()));
    let yb = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let sx = |x: f64| PAD + (x - xb.0) / (xb.1 - xb.0) * (W - 1.5 * PAD);
    let sy = |y: f64| H - PAD - (y - yb.0) / (yb.1 - yb.0) * (H - 2.0 * PAD);
    let mut s = header(title);
    axes(&mut s, xb, yb);
    for m in markers {
        let _ = writeln!(
            s,
            r##"<path d="M{x:.2} {PAD} L{x:.2} {b}" stroke="#888" stroke-dasharray="4 3" fill="none"/>"##,
            x = sx(*m),
            b = H - PAD
        );
    }
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        for (i, (x, y)) in ser.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if i == 0 { "M" } else { "L" }, sx(*x), sy(*y));
        }
        let _ = writeln!(s, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, d.trim_end());
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            W - 1.5 * PAD - 100.0,
            PAD + 14.0 * (k as f64 + 1.0),
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn ramp(t: f64) -> String {
    // blue → white → red
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (u, u, 1.0)
    } else {
        let u = (t - 0.5) / 0.5;
        (1.0, 1.0 - u, 1.0 - u)
    };
    format!("#{:02x}{:02x}{:02x}", (r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8)
}

/// Heatmap of `values[i][j]` at `(xs[j], ys[i])`, cells centered on samples.
pub fn heatmap(title: &str, xs: &[f64], ys: &[f64], values: &[Vec<f64>]) -> String {
    let xb = bounds(xs.iter().copied());
    let yb = bounds(ys.iter().copied());
    let vb = bounds(values.iter().flatten().copied());
    let mut s = header(&format!("{title}  [{:.3e}, {:.3e}]", vb.0, vb.1));
    let cw = (W - 1.5 * PAD) / xs.len().max(1) as f64;
    let ch = (H - 2.0 * PAD) / ys.len().max(1) as f64;
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let t = (v - vb.0) / (vb.1 - vb.0);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                PAD + j as f64 * cw,
                H - PAD - (i as f64 + 1.0) * ch,
                cw + 0.3,
                ch + 0.3,
                ramp(t)
            );
        }
    }
    axes(&mut s, xb, yb);
    s.push_str("</svg>\n");
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}
