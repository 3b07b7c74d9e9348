//! Minimal SVG line plots: axes with ticks, curves, point markers and a
//! shaded band. Output depends only on the data, so it is reproducible.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

#[derive(Debug, Clone)]
pub enum Layer {
    Line { points: Vec<[f64; 2]>, color: &'static str, dashed: bool, label: String },
    Markers { points: Vec<[f64; 2]>, color: &'static str, label: String },
    /// Filled region between `lo` and `hi` over `x`.
    Band { x: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>, color: &'static str, label: String },
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub layers: Vec<Layer>,
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        return format!("{v:.2e}");
    }
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// About five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

impl Plot {
    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        let mut see = |x: f64, y: f64| {
            if x.is_finite() && y.is_finite() {
                b[0] = b[0].min(x);
                b[1] = b[1].max(x);
                b[2] = b[2].min(y);
                b[3] = b[3].max(y);
            }
        };
        for layer in &self.layers {
            match layer {
                Layer::Line { points, .. } | Layer::Markers { points, .. } => points.iter().for_each(|p| see(p[0], p[1])),
                Layer::Band { x, lo, hi, .. } => {
                    for k in 0..x.len() {
                        see(x[k], lo[k]);
                        see(x[k], hi[k]);
                    }
                }
            }
        }
        if !b[0].is_finite() {
            return None;
        }
        if b[1] == b[0] {
            b[0] -= 0.5;
            b[1] += 0.5;
        }
        if b[3] == b[2] {
            let pad = if b[2] == 0.0 { 0.5 } else { 0.05 * b[2].abs() };
            b[2] -= pad;
            b[3] += pad;
        }
        let pad = 0.04 * (b[3] - b[2]);
        Some((b[0], b[1], b[2] - pad, b[3] + pad))
    }

    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let Some((x0, x1, y0, y1)) = self.bounds() else {
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, LEFT + pw / 2.0, TOP + ph / 2.0);
            s.push_str("</svg>\n");
            return s;
        };
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        for t in ticks(x0, x1) {
            let x = px(t);
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, fmt_num(t));
        }
        for t in ticks(y0, y1) {
            let y = py(t);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, fmt_num(t));
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        let mut legend = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Band { x, lo, hi, color, label } => {
                    let keep: Vec<usize> = (0..x.len()).filter(|&k| x[k].is_finite() && lo[k].is_finite() && hi[k].is_finite()).collect();
                    if keep.len() >= 2 {
                        let mut d = String::new();
                        for (n, &k) in keep.iter().enumerate() {
                            let _ = write!(d, "{}{:.2},{:.2} ", if n == 0 { "M" } else { "L" }, px(x[k]), py(hi[k]));
                        }
                        for &k in keep.iter().rev() {
                            let _ = write!(d, "L{:.2},{:.2} ", px(x[k]), py(lo[k]));
                        }
                        d.push('Z');
                        let _ = writeln!(s, r#"<path d="{d}" fill="{color}" fill-opacity="0.3" stroke="none"/>"#);
                    }
                    legend.push((label, *color, "band"));
                }
                Layer::Line { points, color, dashed, label } => {
                    // undefined stretches break the line
                    let mut d = String::new();
                    let mut pen_down = false;
                    for p in points {
                        if p[0].is_finite() && p[1].is_finite() {
                            let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, px(p[0]), py(p[1]));
                            pen_down = true;
                        } else {
                            pen_down = false;
                        }
                    }
                    let dash = if *dashed { r#" stroke-dasharray="6,4""# } else { "" };
                    let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, d.trim_end());
                    legend.push((label, *color, if *dashed { "dashed" } else { "line" }));
                }
                Layer::Markers { points, color, label } => {
                    for p in points.iter().filter(|p| p[0].is_finite() && p[1].is_finite()) {
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#, px(p[0]), py(p[1]));
                    }
                    legend.push((label, *color, "markers"));
                }
            }
        }
        for (n, (label, color, style)) in legend.iter().enumerate() {
            let y = TOP + 14.0 + 16.0 * n as f64;
            let x = LEFT + pw - 150.0;
            match *style {
                "band" => {
                    let _ = writeln!(s, r#"<rect x="{x}" y="{:.2}" width="20" height="10" fill="{color}" fill-opacity="0.3"/>"#, y - 9.0);
                }
                "markers" => {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, x + 10.0, y - 4.0);
                }
                _ => {
                    let dash = if *style == "dashed" { r#" stroke-dasharray="6,4""# } else { "" };
                    let _ = writeln!(s, r#"<line x1="{x}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#, y - 4.0, x + 20.0);
                }
            }
            let _ = writeln!(s, r#"<text x="{}" y="{y:.2}">{}</text>"#, x + 26.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(ticks(3.0, 47.0), vec![10.0, 20.0, 30.0, 40.0]);
    }

    #[test]
    fn numbers() {
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(1.5e6), "1.50e6");
        assert_eq!(fmt_num(-0.0001), "-1.00e-4");
    }

    #[test]
    fn svg_contains_layers_and_survives_gaps() {
        let plot = Plot {
            title: "a < b".into(),
            x_label: "r".into(),
            y_label: "L".into(),
            layers: vec![
                Layer::Band { x: vec![0.0, 1.0, 2.0], lo: vec![0.0, 0.5, f64::NAN], hi: vec![1.0, 1.5, 2.0], color: "gray", label: "envelope".into() },
                Layer::Line { points: vec![[0.0, 0.0], [1.0, f64::NAN], [2.0, 2.0]], color: "black", dashed: false, label: "observed".into() },
            ],
        };
        let svg = plot.to_svg();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(!svg.contains("NaN"));
        assert_eq!(svg, plot.to_svg());
        assert!(Plot::default().to_svg().contains("no data"));
    }
}
