//! Minimal static SVG charts for the `--svg` flag.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 4] = ["#2b7a3d", "#c0392b", "#2c5d8f", "#8e6c1f"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Points,
    Line,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Dashed horizontal reference lines.
    pub h_lines: Vec<(f64, String)>,
    /// Draw the y = x diagonal.
    pub diagonal: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Scale {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        let (lo, hi) = if hi > lo {
            let pad = (hi - lo) * 0.05;
            (lo - pad, hi + pad)
        } else {
            (lo - 0.5, hi + 0.5)
        };
        Scale { lo, hi, a, b }
    }

    fn at(&self, v: f64) -> f64 {
        self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / 4.0)
            .collect()
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        esc(title)
    );
}

fn axes(out: &mut String, xs: &Scale, ys: &Scale, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = writeln!(
        out,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    for t in xs.ticks() {
        let x = xs.at(t);
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{t:.2}</text>"#,
            y0 + 16.0
        );
    }
    for t in ys.ticks() {
        let y = ys.at(t);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{t:.2}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 18.0,
        esc(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(18,{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        esc(y_label)
    );
}

pub fn render(chart: &Chart) -> String {
    let all: Vec<(f64, f64)> = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let fold = |f: fn(&(f64, f64)) -> f64| {
        all.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (mut xlo, mut xhi) = fold(|p| p.0);
    let (mut ylo, mut yhi) = fold(|p| p.1);
    for (v, _) in &chart.h_lines {
        ylo = ylo.min(*v);
        yhi = yhi.max(*v);
    }
    if all.is_empty() {
        (xlo, xhi, ylo, yhi) = (0.0, 1.0, 0.0, 1.0);
    }
    if chart.diagonal {
        let (lo, hi) = (xlo.min(ylo), xhi.max(yhi));
        (xlo, xhi, ylo, yhi) = (lo, hi, lo, hi);
    }
    let xs = Scale::new(xlo, xhi, LEFT, W - RIGHT);
    let ys = Scale::new(ylo, yhi, H - BOTTOM, TOP);

    let mut out = String::new();
    header(&mut out, &chart.title);
    axes(&mut out, &xs, &ys, &chart.x_label, &chart.y_label);
    if chart.diagonal {
        let (lo, hi) = (xs.lo.max(ys.lo), xs.hi.min(ys.hi));
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#999"/>"##,
            xs.at(lo),
            ys.at(lo),
            xs.at(hi),
            ys.at(hi)
        );
    }
    for (v, label) in &chart.h_lines {
        let y = ys.at(*v);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#555" stroke-dasharray="5,4"/>"##,
            W - RIGHT
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"#,
            W - RIGHT - 2.0,
            y - 3.0,
            esc(label)
        );
    }
    for (i, s) in chart.series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| (xs.at(x), ys.at(y)))
            .collect();
        match s.mark {
            Mark::Points => {
                for (x, y) in pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{colour}" fill-opacity="0.6"/>"#
                    );
                }
            }
            Mark::Line => {
                let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
                    d.join(" ")
                );
            }
        }
        if chart.series.len() > 1 {
            let y = TOP + 14.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{y:.1}" fill="{colour}">{}</text>"#,
                LEFT + 8.0,
                esc(&s.name)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Horizontal bars with optional error whiskers, one per label, top to bottom.
pub fn bars(title: &str, x_label: &str, items: &[(String, f64, f64)]) -> String {
    let hi = items
        .iter()
        .map(|(_, v, e)| v + e)
        .fold(0.0f64, f64::max);
    let lo = items
        .iter()
        .map(|(_, v, e)| v - e)
        .fold(0.0f64, f64::min);
    let left = 170.0;
    let xs = Scale::new(lo, hi, left, W - RIGHT);
    let row = ((H - TOP - BOTTOM) / items.len().max(1) as f64).min(24.0);
    let mut out = String::new();
    header(&mut out, title);
    let zero = xs.at(0.0);
    for (i, (name, v, e)) in items.iter().enumerate() {
        let y = TOP + row * i as f64;
        let (a, b) = (xs.at(*v).min(zero), xs.at(*v).max(zero));
        let _ = writeln!(
            out,
            r##"<rect x="{a:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#2b7a3d"/>"##,
            y + 2.0,
            b - a,
            row - 4.0
        );
        if *e > 0.0 {
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
                xs.at(v - e),
                y + row / 2.0,
                xs.at(v + e),
                y + row / 2.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + row / 2.0 + 4.0,
            esc(name)
        );
    }
    let base = TOP + row * items.len() as f64;
    let _ = writeln!(
        out,
        r#"<line x1="{zero:.1}" y1="{TOP}" x2="{zero:.1}" y2="{base:.1}" stroke="black"/>"#
    );
    for t in xs.ticks() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{t:.3}</text>"#,
            xs.at(t),
            base + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (left + W - RIGHT) / 2.0,
        base + 36.0,
        esc(x_label)
    );
    out.push_str("</svg>\n");
    out
}

/// Value grid coloured on [-1, 1]; `None` cells stay grey.
pub fn heatmap(title: &str, rows: &[String], cols: &[String], values: &[Vec<Option<f64>>]) -> String {
    let left = 120.0;
    let top = 90.0;
    let cw = ((W - left - RIGHT) / cols.len().max(1) as f64).min(60.0);
    let ch = ((H - top - 20.0) / rows.len().max(1) as f64).min(30.0);
    let mut out = String::new();
    header(&mut out, title);
    for (j, c) in cols.iter().enumerate() {
        let x = left + cw * (j as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text transform="translate({x:.1},{:.1}) rotate(-45)" font-size="10">{}</text>"#,
            top - 6.0,
            esc(c)
        );
    }
    for (i, r) in rows.iter().enumerate() {
        let y = top + ch * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"#,
            left - 6.0,
            y + ch / 2.0 + 4.0,
            esc(r)
        );
        for (j, v) in values[i].iter().enumerate() {
            let x = left + cw * j as f64;
            let fill = match v {
                Some(v) => {
                    let t = v.clamp(-1.0, 1.0);
                    let (r, g, b) = if t >= 0.0 {
                        (255.0 * (1.0 - t), 255.0 - 90.0 * t, 255.0 * (1.0 - t))
                    } else {
                        (255.0, 255.0 * (1.0 + t), 255.0 * (1.0 + t))
                    };
                    format!("rgb({},{},{})", r as u8, g as u8, b as u8)
                }
                None => "#ddd".to_string(),
            };
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{cw:.1}" height="{ch:.1}" fill="{fill}" stroke="white"/>"#
            );
            if let Some(v) = v {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9">{v:.2}</text>"#,
                    x + cw / 2.0,
                    y + ch / 2.0 + 3.0
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed_and_stable() {
        let chart = Chart {
            title: "a < b".into(),
            series: vec![Series {
                name: "s".into(),
                points: vec![(0.0, 1.0), (1.0, 2.0), (f64::NAN, 0.0)],
                mark: Mark::Line,
            }],
            h_lines: vec![(1.5, "mean".into())],
            ..Chart::default()
        };
        let a = render(&chart);
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("a &lt; b"));
        assert_eq!(a, render(&chart));
    }

    #[test]
    fn empty_inputs_still_render() {
        assert!(render(&Chart::default()).contains("</svg>"));
        assert!(bars("t", "x", &[]).contains("</svg>"));
        assert!(heatmap("t", &[], &[], &[]).contains("</svg>"));
    }
}
