//! Standalone SVG line plots with a logarithmic error axis.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Values at or below zero are drawn at this floor on the log axis.
pub const LOG_FLOOR: f64 = 1e-16;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// (iteration, error)
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, values: &[f64]) -> Self {
        Series {
            label: label.into(),
            points: values
                .iter()
                .enumerate()
                .map(|(t, v)| (t as f64, *v))
                .collect(),
        }
    }
}

fn log_value(v: f64) -> f64 {
    if v.is_nan() || v <= LOG_FLOOR {
        LOG_FLOOR.log10()
    } else {
        v.log10()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders iteration against log₁₀ error, one polyline and legend entry per series.
pub fn render_semilogy(series: &[Series], y_label: &str) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::EmptyPlot);
    }
    let pts = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|p| p.1.is_finite() || p.1.is_nan())
    };
    let x_max = pts().map(|p| p.0).fold(1.0_f64, f64::max);
    let x_min = pts().map(|p| p.0).fold(0.0_f64, f64::min);
    let ly: Vec<f64> = pts().map(|p| log_value(p.1)).collect();
    let mut y_lo = ly.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let mut y_hi = ly.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    if !y_lo.is_finite() || !y_hi.is_finite() {
        y_lo = -1.0;
        y_hi = 0.0;
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * pw;
    let sy = |ly: f64| TOP + (y_hi - ly) / (y_hi - y_lo) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );

    let decades = (y_hi - y_lo) as i64;
    let step = (decades / 8).max(1);
    let mut e = y_lo as i64;
    while e <= y_hi as i64 {
        let y = sy(e as f64);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
        e += step;
    }
    let x_step = nice_step(x_max - x_min);
    let mut xt = (x_min / x_step).ceil() * x_step;
    while xt <= x_max + 1e-9 {
        let x = sx(xt);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{xt}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0
        );
        xt += x_step;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .filter(|p| !p.1.is_infinite())
            .map(|&(x, v)| format!("{:.2},{:.2}", sx(x), sy(log_value(v))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">{}</text></g>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            lx + 26.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    (nice * mag).max(1.0)
}

pub fn emit_plot(series: &[Series], y_label: &str, path: &Path) -> Result<()> {
    let svg = render_semilogy(series, y_label)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vertex_counts(svg: &str) -> Vec<usize> {
        svg.lines()
            .filter(|l| l.starts_with("<polyline"))
            .map(|l| {
                let start = l.find("points=\"").unwrap() + 8;
                let end = l[start..].find('"').unwrap() + start;
                l[start..end].split_whitespace().count()
            })
            .collect()
    }

    #[test]
    fn one_curve_with_all_vertices() {
        let values: Vec<f64> = (0..=100).map(|t| 0.9f64.powi(t)).collect();
        let svg = render_semilogy(&[Series::new("approx_gd", &values)], "w error").unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(vertex_counts(&svg), vec![101]);
        assert_eq!(svg.matches("class=\"legend\"").count(), 1);
    }

    #[test]
    fn two_algorithms_two_legend_entries() {
        let a = Series::new("approx_gd", &[1.0, 0.1, 0.01]);
        let b = Series::new("double_convotron", &[1.0, 0.5, 0.4]);
        let svg = render_semilogy(&[a, b], "w error").unwrap();
        assert_eq!(svg.matches("class=\"legend\"").count(), 2);
        assert!(svg.contains(">double_convotron<"));
    }

    #[test]
    fn non_positive_values_are_floored() {
        let svg = render_semilogy(&[Series::new("x", &[1.0, 0.0, -3.0])], "e").unwrap();
        assert_eq!(vertex_counts(&svg), vec![3]);
        assert!(svg.contains(">1e-16<"));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(render_semilogy(&[], "e"), Err(Error::EmptyPlot)));
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("missing").join("plot.svg");
        assert!(matches!(
            emit_plot(&[Series::new("x", &[1.0])], "e", &bad),
            Err(Error::Io { .. })
        ));
    }
}
