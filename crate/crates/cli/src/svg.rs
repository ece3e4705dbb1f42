//! Minimal SVG charts: polylines, scatter points and histogram bars.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

pub enum Mark {
    Line,
    Points,
}

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub mark: Mark,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for &(px, py) in points.filter(|(a, b)| a.is_finite() && b.is_finite()) {
            x = (x.0.min(px), x.1.max(px));
            y = (y.0.min(py), y.1.max(py));
        }
        let pad = |(lo, hi): (f64, f64)| {
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let d = 0.05 * (hi - lo);
                (lo - d, hi + d)
            }
        };
        Self { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open(svg: &mut String, title: &str, frame: &Frame, x_label: &str, y_label: &str) {
    let (w, h, m) = (WIDTH, HEIGHT, MARGIN);
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(svg, r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * m, h - 2.0 * m);
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = frame.x.0 + t * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + t * (frame.y.1 - frame.y.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, frame.px(xv), h - m + 16.0, tick(xv));
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, m - 6.0, frame.py(yv) + 4.0, tick(yv));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 12.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line and scatter series on shared axes, with a legend.
pub fn chart(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let frame = Frame::fit(series.iter().flat_map(|s| s.points.iter()));
    let mut svg = String::new();
    open(&mut svg, title, &frame, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let finite = s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite());
        match s.mark {
            Mark::Line => {
                let coords: Vec<String> =
                    finite.map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
                    s.color,
                    coords.join(" ")
                );
            }
            Mark::Points => {
                for &(x, y) in finite {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#,
                        frame.px(x),
                        frame.py(y),
                        s.color
                    );
                }
            }
        }
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        let lx = WIDTH - MARGIN - 150.0;
        let _ = writeln!(svg, r#"<rect x="{lx}" y="{}" width="12" height="12" fill="{}"/>"#, ly - 10.0, s.color);
        let _ = writeln!(svg, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 18.0, escape(s.label));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Bars over `[lower, upper)` bins.
pub fn histogram(title: &str, x_label: &str, bins: &[(f64, f64, usize)]) -> String {
    let max = bins.iter().map(|b| b.2).max().unwrap_or(1).max(1) as f64;
    let corners: Vec<(f64, f64)> = bins.iter().flat_map(|b| [(b.0, 0.0), (b.1, b.2 as f64)]).chain([(0.0, max)]).collect();
    let mut frame = Frame::fit(corners.iter());
    if let (Some(first), Some(last)) = (bins.first(), bins.last()) {
        frame.x = (first.0, last.1.max(first.0 + 1e-12));
    }
    frame.y = (0.0, max * 1.1);
    let mut svg = String::new();
    open(&mut svg, title, &frame, x_label, "runs");
    for &(lo, hi, count) in bins {
        let (x0, x1) = (frame.px(lo), frame.px(hi));
        let (y0, y1) = (frame.py(count as f64), frame.py(0.0));
        let _ = writeln!(
            svg,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" stroke="white"/>"##,
            (x1 - x0).max(0.0),
            (y1 - y0).max(0.0)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
