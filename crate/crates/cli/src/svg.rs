//! Minimal hand-written SVG for lobe diagrams.

use std::io::{self, Write};

use chatterlobe::BoundaryBranch;

use crate::Axes;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 16.0;
const BOTTOM: f64 = 48.0;
/// Far-off points are pulled in to this many pixels outside the frame.
const OVERSHOOT: f64 = 2000.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Tick positions at a 1, 2 or 5 times power-of-ten spacing.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Draws each branch as a polyline over (0, δ_max) × (h_min, h_max).
pub fn write_svg(branches: &[BoundaryBranch], axes: Axes, mut w: impl Write) -> io::Result<()> {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |d: f64| (LEFT + d / axes.delta_max * pw).clamp(-OVERSHOOT, WIDTH + OVERSHOOT);
    let y = |h: f64| (TOP + (axes.h_max - h) / (axes.h_max - axes.h_min) * ph).clamp(-OVERSHOOT, HEIGHT + OVERSHOOT);
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )?;
    writeln!(
        w,
        r#"<defs><clipPath id="frame"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath></defs>"#
    )?;
    writeln!(w, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#)?;
    for t in ticks(0.0, axes.delta_max) {
        let tx = x(t);
        let base = TOP + ph;
        writeln!(w, r#"<line x1="{tx:.2}" y1="{base}" x2="{tx:.2}" y2="{:.2}" stroke="black"/>"#, base + 4.0)?;
        writeln!(w, r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, base + 16.0, label(t))?;
    }
    for t in ticks(axes.h_min, axes.h_max) {
        let ty = y(t);
        writeln!(w, r#"<line x1="{:.2}" y1="{ty:.2}" x2="{LEFT}" y2="{ty:.2}" stroke="black"/>"#, LEFT - 4.0)?;
        writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, ty + 4.0, label(t))?;
    }
    if axes.h_min < 0.0 && axes.h_max > 0.0 {
        let y0 = y(0.0);
        writeln!(
            w,
            r#"<line x1="{LEFT}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="grey" stroke-dasharray="4 3"/>"#,
            LEFT + pw
        )?;
    }
    writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">δ</text>"#, LEFT + 0.5 * pw, HEIGHT - 8.0)?;
    writeln!(w, r#"<text x="14" y="{:.2}" text-anchor="middle">h</text>"#, TOP + 0.5 * ph)?;
    writeln!(w, r#"<g clip-path="url(#frame)" fill="none" stroke-width="1.5">"#)?;
    for b in branches {
        let colour = COLOURS[(b.n.get() as usize - 1) % COLOURS.len()];
        let pts: Vec<String> = b
            .points
            .iter()
            .filter(|p| p.delta.is_finite() && p.h.is_finite())
            .map(|p| format!("{:.2},{:.2}", x(p.delta), y(p.h)))
            .collect();
        if pts.len() >= 2 {
            writeln!(w, r#"<polyline stroke="{colour}" points="{}"/>"#, pts.join(" "))?;
        }
    }
    writeln!(w, "</g>")?;
    writeln!(w, "</svg>")
}
