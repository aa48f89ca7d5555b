//! Minimal self-contained SVG line/point charts.
//!
//! Output depends only on the input data, so identical inputs give
//! byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartStyle {
    Line,
    Points,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Overrides the chart-wide style for this series.
    pub style: Option<ChartStyle>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            style: None,
        }
    }

    pub fn with_style(mut self, style: ChartStyle) -> Self {
        self.style = Some(style);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: u32,
    pub height: u32,
}

impl Default for ChartOptions {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            width: 800,
            height: 480,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn nice_step(span: f64, target_ticks: usize) -> f64 {
    let raw = span / target_ticks as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Expands a data range to tick-aligned bounds and returns the tick values.
fn axis(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let (lo, hi) = if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        let pad = (lo.abs() * 0.1).max(1.0);
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    };
    let step = nice_step(hi - lo, 5);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let count = ((end - start) / step).round() as usize;
    let ticks = (0..=count).map(|i| start + i as f64 * step).collect();
    (start, end, ticks)
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let s = format!("{v:.decimals$}");
    // avoid "-0"
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Renders `series` to an SVG document.
pub fn render_svg(series: &[Series], style: ChartStyle, opts: &ChartOptions) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidValue("chart needs at least one series".into()));
    }
    for s in series {
        if s.points.is_empty() {
            return Err(Error::InvalidValue(format!("series `{}` has no points", s.name)));
        }
        if s.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidValue(format!("series `{}` has non-finite points", s.name)));
        }
    }

    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let (x0, x1, x_ticks) = axis(x_lo, x_hi);
    let (y0, y1, y_ticks) = axis(y_lo, y_hi);

    let (w, h) = (opts.width as f64, opts.height as f64);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 55.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        opts.width, opts.height, opts.width, opts.height
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    if !opts.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            w / 2.0,
            escape(&opts.title)
        );
    }

    // axes and grid
    let x_step = x_ticks.get(1).map_or(1.0, |t| t - x_ticks[0]);
    let y_step = y_ticks.get(1).map_or(1.0, |t| t - y_ticks[0]);
    let _ = writeln!(svg, r##"<g class="axes" stroke="#333" stroke-width="1">"##);
    let _ = writeln!(
        svg,
        r#"<line x1="{left:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        top + ph,
        left + pw,
        top + ph
    );
    let _ = writeln!(svg, r#"<line x1="{left:.2}" y1="{top:.2}" x2="{left:.2}" y2="{:.2}"/>"#, top + ph);
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r##"<g class="ticks" fill="#333">"##);
    for &t in &x_ticks {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            top + ph,
            top + ph + 5.0,
            top + ph + 18.0,
            tick_label(t, x_step)
        );
    }
    for &t in &y_ticks {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="#333"/><line x1="{left:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#eee"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            left - 5.0,
            left + pw,
            left - 8.0,
            y + 4.0,
            tick_label(t, y_step)
        );
    }
    let _ = writeln!(svg, "</g>");
    if !opts.x_label.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            left + pw / 2.0,
            h - 12.0,
            escape(&opts.x_label)
        );
    }
    if !opts.y_label.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            top + ph / 2.0,
            top + ph / 2.0,
            escape(&opts.y_label)
        );
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(svg, r#"<g class="series" data-name="{}">"#, escape(&s.name));
        match s.style.unwrap_or(style) {
            ChartStyle::Line if s.points.len() > 1 => {
                let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    pts.join(" ")
                );
            }
            _ => {
                for &(x, y) in &s.points {
                    let _ = writeln!(
                        svg,
                        r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                        sx(x),
                        sy(y)
                    );
                }
            }
        }
        let _ = writeln!(svg, "</g>");
    }

    // legend, top-right inside the plot area
    let legend_w = 20.0 + 7.0 * series.iter().map(|s| s.name.chars().count()).max().unwrap_or(0) as f64 + 24.0;
    let lx = left + pw - legend_w - 8.0;
    let ly = top + 8.0;
    let _ = writeln!(
        svg,
        r##"<g class="legend"><rect x="{lx:.2}" y="{ly:.2}" width="{legend_w:.2}" height="{:.2}" fill="white" fill-opacity="0.85" stroke="#999"/>"##,
        8.0 + 18.0 * series.len() as f64
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = ly + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<g class="legend-entry"><rect x="{:.2}" y="{:.2}" width="14" height="4" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx + 8.0,
            y - 5.0,
            lx + 28.0,
            y,
            escape(&s.name)
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_chart(series: &[Series], style: ChartStyle, opts: &ChartOptions, out: impl AsRef<Path>) -> Result<()> {
    let svg = render_svg(series, style, opts)?;
    let out = out.as_ref();
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))
}
