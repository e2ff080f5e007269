//! Minimal static SVG charts. Plots are conveniences; the CSV files are the
//! exact outputs.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Blue-to-red ramp for `t ∈ [0, 1]`.
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (40.0 + 200.0 * t).round() as u8;
    let b = (220.0 - 180.0 * t).round() as u8;
    format!("#{r:02x}50{b:02x}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open(out: &mut String, title: &str, x_label: &str, y_label: &str, frame: &Frame) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n\
         <rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        WIDTH / 2.0,
        escape(title),
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label),
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label),
    );
    for (v, anchor) in [(frame.x0, "start"), (frame.x1, "end")] {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"{anchor}\" fill=\"#666\">{:.3}</text>",
            frame.px(v),
            HEIGHT - MARGIN + 14.0,
            v
        );
    }
    for v in [frame.y0, frame.y1] {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" fill=\"#666\">{:.3}</text>",
            MARGIN - 4.0,
            frame.py(v) + 4.0,
            v
        );
    }
}

fn legend(out: &mut String, entries: &[(String, String)]) {
    for (i, (name, col)) in entries.iter().enumerate() {
        let y = MARGIN + 14.0 + 16.0 * i as f64;
        let x = WIDTH - MARGIN - 110.0;
        let _ = writeln!(
            out,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{col}\"/><text x=\"{:.1}\" y=\"{y:.1}\">{}</text>",
            y - 9.0,
            x + 14.0,
            escape(name)
        );
    }
}

/// One scatter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub class: usize,
    /// Drawn as an outline instead of a filled marker.
    pub hollow: bool,
    /// Optional third coordinate, shown through a color ramp.
    pub depth: Option<f64>,
}

/// Scatter plot. Colors encode the class unless points carry a depth, in which
/// case color encodes depth and marker shape encodes the class.
pub fn scatter(points: &[Point], class_names: &[String], title: &str) -> String {
    let frame = Frame::fit(points.iter().map(|p| p.x), points.iter().map(|p| p.y));
    let mut out = String::new();
    open(&mut out, title, "coordinate 1", "coordinate 2", &frame);
    let depths: Vec<f64> = points.iter().filter_map(|p| p.depth).collect();
    let (dlo, dhi) = depths.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    for p in points {
        let (fill, shape) = match p.depth {
            Some(z) => {
                let t = if dhi > dlo { (z - dlo) / (dhi - dlo) } else { 0.5 };
                (ramp(t), p.class % 3)
            }
            None => (color(p.class).to_string(), 0),
        };
        let style = if p.hollow {
            format!("fill=\"none\" stroke=\"{fill}\" stroke-width=\"1.2\"")
        } else {
            format!("fill=\"{fill}\" fill-opacity=\"0.8\"")
        };
        let (x, y) = (frame.px(p.x), frame.py(p.y));
        let _ = match shape {
            0 => writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3.5\" {style}/>"),
            1 => writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"7\" height=\"7\" {style}/>",
                x - 3.5,
                y - 3.5
            ),
            _ => writeln!(
                out,
                "<polygon points=\"{x:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" {style}/>",
                y - 4.0,
                x - 4.0,
                y + 3.0,
                x + 4.0,
                y + 3.0
            ),
        };
    }
    if depths.is_empty() {
        let entries: Vec<(String, String)> = class_names
            .iter()
            .enumerate()
            .map(|(j, n)| (n.clone(), color(j).to_string()))
            .collect();
        legend(&mut out, &entries);
    }
    out.push_str("</svg>\n");
    out
}

/// A named series of `(x, y)` points; `None` marks a missing value.
pub type Series = (String, Vec<(f64, Option<f64>)>);

/// Line chart of named `(x, y)` series. Missing values break the line.
pub fn line_chart(series: &[Series], title: &str, x_label: &str, y_label: &str) -> String {
    let xs = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|(_, pts)| pts.iter().filter_map(|p| p.1));
    let frame = Frame::fit(xs, ys);
    let mut out = String::new();
    open(&mut out, title, x_label, y_label, &frame);
    for (i, (_, pts)) in series.iter().enumerate() {
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, out: &mut String| {
            if segment.len() > 1 {
                let _ = writeln!(
                    out,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>",
                    segment.join(" "),
                    color(i)
                );
            }
            segment.clear();
        };
        for &(x, y) in pts {
            match y {
                Some(y) => {
                    let (px, py) = (frame.px(x), frame.py(y));
                    segment.push(format!("{px:.2},{py:.2}"));
                    let _ = writeln!(
                        out,
                        "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"{}\"/>",
                        color(i)
                    );
                }
                None => flush(&mut segment, &mut out),
            }
        }
        flush(&mut segment, &mut out);
    }
    let entries: Vec<(String, String)> = series
        .iter()
        .enumerate()
        .map(|(i, (n, _))| (n.clone(), color(i).to_string()))
        .collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_marks_hollow_points() {
        let pts = [
            Point {
                x: 0.0,
                y: 0.0,
                class: 0,
                hollow: false,
                depth: None,
            },
            Point {
                x: 1.0,
                y: 2.0,
                class: 1,
                hollow: true,
                depth: None,
            },
        ];
        let svg = scatter(&pts, &["a<b".into(), "c".into()], "t");
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("fill=\"none\""));
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn line_chart_breaks_on_missing() {
        let s = vec![(
            "m".to_string(),
            vec![(1.0, Some(0.5)), (2.0, None), (3.0, Some(0.7)), (4.0, Some(0.8))],
        )];
        let svg = line_chart(&s, "acc", "dim", "accuracy");
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 3);
    }
}
