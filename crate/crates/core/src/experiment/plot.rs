//! Minimal SVG scatter plots and histograms.

use std::fmt::Write;

use super::stats::Histogram;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let (x0, x1) = padded_range(xs);
        let (y0, y1) = padded_range(ys);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(out, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
        for i in 0..=TICKS {
            let f = i as f64 / TICKS as f64;
            let xv = self.x0 + f * (self.x1 - self.x0);
            let yv = self.y0 + f * (self.y1 - self.y0);
            let (x, y) = (self.px(xv), self.py(yv));
            let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0);
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#, b + 18.0, tick(xv));
            let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/>"#, l - 5.0);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#, l - 8.0, y + 4.0, tick(yv));
        }
        let _ = writeln!(out, r#"<text x="{:.2}" y="22" font-size="14" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#, (l + r) / 2.0, H - 15.0, escape(xlabel));
        let _ = writeln!(
            out,
            r#"<text x="18" y="{0:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {0:.2})">{1}</text>"#,
            (t + b) / 2.0,
            escape(ylabel)
        );
    }
}

fn padded_range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-2 && v.abs() < 1e4) {
        format!("{v:.2}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Scatter plot of finite points with an optional line `y = a x + b`.
pub fn scatter(points: &[(f64, f64)], line: Option<(f64, f64)>, title: &str, xlabel: &str, ylabel: &str) -> String {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let frame = Frame::new(pts.iter().map(|p| p.0), pts.iter().map(|p| p.1));
    let mut out = header();
    frame.axes(&mut out, title, xlabel, ylabel);
    for &(x, y) in &pts {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, frame.px(x), frame.py(y));
    }
    if let Some((a, b)) = line {
        let (xa, xb) = (frame.x0, frame.x1);
        let clip = |y: f64| y.clamp(frame.y0, frame.y1);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="2"/>"#,
            frame.px(xa),
            frame.py(clip(a * xa + b)),
            frame.px(xb),
            frame.py(clip(a * xb + b))
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Bar chart of a histogram, with a dashed marker at `x = 0` when it is in
/// range.
pub fn histogram(h: &Histogram, title: &str, xlabel: &str) -> String {
    let max = h.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let frame = Frame {
        x0: h.edges[0],
        x1: *h.edges.last().expect("edges"),
        y0: 0.0,
        y1: max * 1.05,
    };
    let mut out = header();
    frame.axes(&mut out, title, xlabel, "count");
    for (i, &c) in h.counts.iter().enumerate() {
        let (xa, xb) = (frame.px(h.edges[i]), frame.px(h.edges[i + 1]));
        let (ya, yb) = (frame.py(c as f64), frame.py(0.0));
        let _ = writeln!(
            out,
            r#"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="gray" stroke="black"/>"#,
            (xb - xa).max(0.0),
            (yb - ya).max(0.0)
        );
    }
    if frame.x0 < 0.0 && frame.x1 > 0.0 {
        let x = frame.px(0.0);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="black" stroke-dasharray="4 3"/>"#,
            H - BOTTOM
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_has_one_circle_per_finite_point() {
        let svg = scatter(&[(0.0, 1.0), (1.0, 2.0), (f64::INFINITY, 0.0)], Some((1.0, 1.0)), "t", "x", "y");
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("firebrick"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn histogram_has_one_bar_per_bin() {
        let h = Histogram::new(&[-1.0, 0.5, 2.0], 4);
        let svg = histogram(&h, "D", "value");
        assert_eq!(svg.matches("fill=\"gray\"").count(), 4);
        assert!(svg.contains("stroke-dasharray"));
    }
}
