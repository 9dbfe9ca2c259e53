//! Plain-text artifact helpers: SVG line plots and atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// A single-series line plot. Non-finite points are skipped.
pub fn svg_line_plot(title: &str, x_label: &str, xs: &[f64], ys: &[f64]) -> String {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        let pad = if y0 == 0.0 { 1.0 } else { y0.abs() * 0.1 };
        y0 -= pad;
        y1 += pad;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{m} {m} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for (v, y) in [(y0, HEIGHT - MARGIN), (y1, MARGIN)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.3e}</text>"#,
            MARGIN - 4.0
        );
    }
    for (v, x) in [(x0, MARGIN), (x1, WIDTH - MARGIN)] {
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{v:.3}</text>"#,
            HEIGHT - MARGIN + 14.0
        );
    }
    let mut path = String::new();
    for (k, &(x, y)) in pts.iter().enumerate() {
        let _ = write!(path, "{}{:.2} {:.2} ", if k == 0 { "M" } else { "L" }, sx(x), sy(y));
    }
    let _ = writeln!(out, r#"<path d="{}" stroke="steelblue" fill="none"/>"#, path.trim_end());
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Write through a temporary sibling and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_is_well_formed_and_skips_nan() {
        let svg = svg_line_plot("a < b", "t", &[0.0, 1.0, 2.0], &[1.0, f64::NAN, 3.0]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        // two finite points: one move, one line segment
        assert_eq!(svg.matches(" L").count(), 1);
    }
}
