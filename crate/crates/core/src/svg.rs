//! Small SVG writer for line plots and heatmaps.

use std::fmt::Write;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Svg {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        );
    }

    pub fn line(&mut self, (x1, y1): (f64, f64), (x2, y2): (f64, f64), stroke: &str, dashed: bool) {
        let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"{dash}/>"#
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
    }

    /// `anchor` is an SVG `text-anchor` value.
    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size}" font-family="sans-serif" text-anchor="{anchor}">{}</text>"#,
            escape(content)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Line plot with linear axes fitted to the data, an optional dashed
/// horizontal reference line, and a legend.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    reference: Option<f64>,
) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 160.0, 40.0, 50.0);
    let all = series.iter().flat_map(|s| s.points.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = all.fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), (x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if let Some(r) = reference {
        y0 = y0.min(r);
        y1 = y1.max(r);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let pad = ((y1 - y0) * 0.05).max(1e-3);
    (y0, y1) = (y0 - pad, y1 + pad);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = Svg::new(w, h);
    svg.text(w / 2.0, 24.0, 15.0, "middle", title);
    svg.line((left, top + ph), (left + pw, top + ph), "black", false);
    svg.line((left, top), (left, top + ph), "black", false);
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        svg.line((sx(fx), top + ph), (sx(fx), top + ph + 4.0), "black", false);
        svg.text(sx(fx), top + ph + 18.0, 11.0, "middle", &format!("{fx:.2}"));
        svg.line((left - 4.0, sy(fy)), (left, sy(fy)), "black", false);
        svg.text(left - 7.0, sy(fy) + 4.0, 11.0, "end", &format!("{fy:.3}"));
    }
    svg.text(left + pw / 2.0, h - 10.0, 13.0, "middle", x_label);
    svg.text(16.0, top + ph / 2.0, 13.0, "middle", y_label);
    if let Some(r) = reference {
        svg.line((left, sy(r)), (left + pw, sy(r)), "gray", true);
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().map(|&(x, y)| (sx(x), sy(y))).collect();
        svg.polyline(&pts, color);
        let ly = top + 16.0 * i as f64 + 8.0;
        svg.line((left + pw + 12.0, ly), (left + pw + 32.0, ly), color, false);
        svg.text(left + pw + 38.0, ly + 4.0, 11.0, "start", &s.name);
    }
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_text() {
        let mut s = Svg::new(10.0, 10.0);
        s.text(0.0, 0.0, 10.0, "start", "a<b & c");
        assert!(s.finish().contains("a&lt;b &amp; c"));
    }

    #[test]
    fn plot_has_one_polyline_per_series() {
        let series = vec![
            Series {
                name: "one".into(),
                points: vec![(0.0, 0.5), (0.4, 0.7)],
            },
            Series {
                name: "two".into(),
                points: vec![(0.0, 0.5), (0.4, 0.6)],
            },
        ];
        let out = line_plot("t", "x", "y", &series, Some(0.5));
        assert_eq!(out.matches("<polyline").count(), 2);
        assert!(out.starts_with("<svg"));
    }
}
