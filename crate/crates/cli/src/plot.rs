//! Minimal SVG line and density plots from CSV columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 150.0, 40.0, 50.0); // left, right, top, bottom
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Line,
    /// Histogram outline drawn as steps centred on each x.
    Density,
}

/// Points of one series, keyed by group name ("" without grouping).
pub type Series = BTreeMap<String, Vec<(f64, f64)>>;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    let s = if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) { format!("{v:.2e}") } else { format!("{v:.3}") };
    let s = if s.contains('.') && !s.contains('e') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        (lo - pad, hi + pad)
    }
}

/// Density series as step outlines: each x is a bin centre and bins are as
/// wide as the smallest gap between centres.
fn steps(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let width = points.windows(2).map(|w| w[1].0 - w[0].0).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    let half = if width.is_finite() { width / 2.0 } else { 0.5 };
    let mut out = Vec::with_capacity(points.len() * 2 + 2);
    out.push((points[0].0 - half, 0.0));
    for &(x, y) in points {
        out.push((x - half, y));
        out.push((x + half, y));
    }
    out.push((points[points.len() - 1].0 + half, 0.0));
    out
}

/// Renders the series; `None` when there is nothing to draw.
pub fn render(series: &Series, kind: Kind, x_label: &str, y_label: &str, title: Option<&str>) -> Option<String> {
    let drawn: Vec<(&String, Vec<(f64, f64)>)> = series
        .iter()
        .filter(|(_, p)| !p.is_empty())
        .map(|(g, p)| {
            let mut p = p.clone();
            p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            (g, if kind == Kind::Density { steps(&p) } else { p })
        })
        .collect();
    if drawn.is_empty() {
        return None;
    }
    let all = || drawn.iter().flat_map(|(_, p)| p.iter());
    let (x0, x1) = range(all().map(|p| p.0));
    let (mut y0, y1) = range(all().map(|p| p.1));
    if kind == Kind::Density {
        y0 = y0.min(0.0);
    }
    let (ml, mr, mt, mb) = MARGIN;
    let pw = WIDTH - ml - mr;
    let ph = HEIGHT - mt - mb;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if let Some(t) = title {
        let _ = writeln!(s, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#, ml + pw / 2.0, escape(t));
    }
    let _ = writeln!(
        s,
        r#"<path d="M{ml:.2},{mt:.2}V{:.2}H{:.2}" fill="none" stroke="black"/>"#,
        mt + ph,
        ml + pw
    );
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(s, r#"<path d="M{px:.2},{:.2}v5M{ml:.2},{py:.2}h-5" stroke="black"/>"#, mt + ph);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, mt + ph + 18.0, fmt_tick(xv));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 8.0, py + 4.0, fmt_tick(yv));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(y_label)
    );
    for (i, (group, points)) in drawn.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        if !group.is_empty() {
            let ly = mt + 14.0 * i as f64;
            let lx = ml + pw + 12.0;
            let _ = writeln!(s, r#"<path d="M{lx:.2},{:.2}h16" stroke="{colour}" stroke-width="2"/>"#, ly + 4.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 20.0, ly + 8.0, escape(group));
        }
    }
    s.push_str("</svg>\n");
    Some(s)
}
