//! Small deterministic SVG line charts.

use std::fmt::Write as _;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Optional lower / upper envelope drawn as a translucent band.
    pub band: Option<Vec<(f64, f64, f64)>>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, band: None, dashed: false }
    }

    pub fn with_band(mut self, band: Vec<(f64, f64, f64)>) -> Self {
        self.band = Some(band);
        self
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), log_y: false, series: Vec::new() }
    }

    pub fn log_y(mut self, on: bool) -> Self {
        self.log_y = on;
        self
    }

    pub fn push(&mut self, s: Series) {
        self.series.push(s);
    }
}

const W: f64 = 520.0;
const H: f64 = 360.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 34.0;
const MB: f64 = 50.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

// Fixed precision keeps the output byte-stable.
fn n(x: f64) -> String {
    format!("{x:.2}")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { if v > 0.0 { v.log10() } else { continue } } else { v };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let pad = if lo.abs() > 1e-12 { lo.abs() * 0.1 } else { 1.0 };
            (lo, hi) = (lo - pad, hi + pad);
        }
        Self { lo, hi, log }
    }

    fn map(&self, v: f64, a: f64, b: f64) -> Option<f64> {
        let v = if self.log { if v > 0.0 { v.log10() } else { return None } } else { v };
        if !v.is_finite() {
            return None;
        }
        Some(a + (v - self.lo) / (self.hi - self.lo) * (b - a))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        (0..=4)
            .map(|i| {
                let v = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                let label = if self.log { format!("1e{v:.1}") } else { format!("{v:.3}") };
                (v, label)
            })
            .collect()
    }
}

fn render_panel(out: &mut String, p: &Panel, ox: f64) {
    let xs = Axis::fit(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0)), false);
    let ys = Axis::fit(
        p.series.iter().flat_map(|s| {
            let band = s.band.iter().flatten().flat_map(|b| [b.1, b.2]);
            s.points.iter().map(|q| q.1).chain(band).collect::<Vec<_>>()
        }),
        p.log_y,
    );
    let (x0, x1, y0, y1) = (ox + ML, ox + W - MR, H - MB, MT);
    let _ = writeln!(out, r#"<g class="panel">"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, n(ox + W / 2.0), esc(&p.title));
    let _ = writeln!(out, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#, n(x0), n(y1), n(x1 - x0), n(y0 - y1));
    for (v, label) in xs.ticks() {
        let x = xs.map(v, x0, x1).unwrap_or(x0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{}</text>"#, n(x), n(y0 + 14.0), label);
    }
    for (v, label) in ys.ticks() {
        let y = y0 + (v - ys.lo) / (ys.hi - ys.lo) * (y1 - y0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"#, n(x0 - 4.0), n(y + 3.0), label);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, n((x0 + x1) / 2.0), n(H - 12.0), esc(&p.x_label));
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 {} {})">{}</text>"#,
        n(ox + 14.0),
        n((y0 + y1) / 2.0),
        n(ox + 14.0),
        n((y0 + y1) / 2.0),
        esc(&p.y_label)
    );
    for (i, s) in p.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(band) = &s.band {
            let upper: Vec<String> = band
                .iter()
                .filter_map(|&(x, _, hi)| Some(format!("{},{}", n(xs.map(x, x0, x1)?), n(ys.map(hi, y0, y1)?))))
                .collect();
            let lower: Vec<String> = band
                .iter()
                .rev()
                .filter_map(|&(x, lo, _)| Some(format!("{},{}", n(xs.map(x, x0, x1)?), n(ys.map(lo, y0, y1)?))))
                .collect();
            if !upper.is_empty() {
                let _ = writeln!(
                    out,
                    r#"<polygon class="band" points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                    upper.join(" "),
                    lower.join(" ")
                );
            }
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .filter_map(|&(x, y)| Some(format!("{},{}", n(xs.map(x, x0, x1)?), n(ys.map(y, y0, y1)?))))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-label="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            esc(&s.label),
            pts.join(" ")
        );
        let ly = y1 + 14.0 + 14.0 * i as f64;
        let _ = writeln!(out, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#, n(x1 - 120.0), n(ly - 4.0), n(x1 - 104.0), n(ly - 4.0));
        let _ = writeln!(out, r#"<text class="legend" x="{}" y="{}" font-size="10">{}</text>"#, n(x1 - 100.0), n(ly), esc(&s.label));
    }
    let _ = writeln!(out, "</g>");
}

/// Render panels side by side into one SVG document.
pub fn render(panels: &[Panel]) -> String {
    let width = W * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">"#,
        n(width),
        n(H),
        n(width),
        n(H)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, W * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

/// Number of plotted series in a document produced by [`render`].
pub fn count_series(svg: &str) -> usize {
    svg.matches(r#"class="series""#).count()
}
