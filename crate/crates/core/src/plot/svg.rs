//! Minimal string-backed SVG writer. Coordinates are printed with two
//! decimals so output bytes depend only on the inputs.

use std::fmt::Write;

pub const WIDTH: f64 = 720.0;
pub const HEIGHT: f64 = 440.0;
pub const MARGIN_LEFT: f64 = 70.0;
pub const MARGIN_RIGHT: f64 = 30.0;
pub const MARGIN_TOP: f64 = 40.0;
pub const MARGIN_BOTTOM: f64 = 60.0;

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Linear map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy)]
pub struct Scale {
    pub lo: f64,
    pub hi: f64,
    pub px_lo: f64,
    pub px_hi: f64,
}

impl Scale {
    /// A zero-width data range is widened so the map stays finite.
    pub fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, px_lo, px_hi }
    }

    pub fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    /// About `n` round tick values inside the range.
    pub fn ticks(&self, n: usize) -> Vec<f64> {
        let span = self.hi - self.lo;
        let raw = span / n.max(1) as f64;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .into_iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

pub fn fmt_tick(v: f64) -> String {
    if v == v.round() && v.abs() < 1e9 {
        format!("{}", v as i64)
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

pub struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    pub fn standard() -> Self {
        Self::new(WIDTH, HEIGHT)
    }

    pub fn plot_left(&self) -> f64 {
        MARGIN_LEFT
    }
    pub fn plot_right(&self) -> f64 {
        self.width - MARGIN_RIGHT
    }
    pub fn plot_top(&self) -> f64 {
        MARGIN_TOP
    }
    pub fn plot_bottom(&self) -> f64 {
        self.height - MARGIN_BOTTOM
    }
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}"{extra}/>"#,
            w.max(0.0),
            h.max(0.0)
        );
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width:.2}"/>"#
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        let _ = writeln!(self.body, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}"/>"#);
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64, extra: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width:.2}"{extra}/>"#,
            pts.join(" ")
        );
    }

    pub fn polygon(&mut self, points: &[(f64, f64)], fill: &str, opacity: f64) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{fill}" fill-opacity="{opacity:.2}" stroke="none"/>"#,
            pts.join(" ")
        );
    }

    /// `anchor` is one of start, middle, end.
    pub fn text(&mut self, x: f64, y: f64, content: &str, anchor: &str, size: f64) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="{size:.0}">{}</text>"#,
            escape(content)
        );
    }

    pub fn text_fill(&mut self, x: f64, y: f64, content: &str, size: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle" font-size="{size:.0}" fill="{fill}">{}</text>"#,
            escape(content)
        );
    }

    pub fn text_rotated(&mut self, x: f64, y: f64, content: &str, size: f64) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle" font-size="{size:.0}" transform="rotate(-90 {x:.2} {y:.2})">{}</text>"#,
            escape(content)
        );
    }

    /// Label running upward from its anchor, for crowded category axes.
    pub fn text_rotated_at(&mut self, x: f64, y: f64, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="end" font-size="11" transform="rotate(-45 {x:.2} {y:.2})">{}</text>"#,
            escape(content)
        );
    }

    pub fn title(&mut self, content: &str) {
        let x = self.width / 2.0;
        self.text(x, 24.0, content, "middle", 16.0);
    }

    /// Bottom axis with ticks and a label.
    pub fn x_axis(&mut self, scale: &Scale, label: &str) {
        let y = self.plot_bottom();
        self.line(scale.px_lo, y, scale.px_hi, y, "#333", 1.0);
        for t in scale.ticks(6) {
            let x = scale.map(t);
            self.line(x, y, x, y + 5.0, "#333", 1.0);
            self.text(x, y + 18.0, &fmt_tick(t), "middle", 11.0);
        }
        let cx = (scale.px_lo + scale.px_hi) / 2.0;
        self.text(cx, y + 40.0, label, "middle", 13.0);
    }

    /// Left axis with ticks and a rotated label.
    pub fn y_axis(&mut self, scale: &Scale, label: &str) {
        let x = self.plot_left();
        self.line(x, scale.px_lo, x, scale.px_hi, "#333", 1.0);
        for t in scale.ticks(5) {
            let y = scale.map(t);
            self.line(x - 5.0, y, x, y, "#333", 1.0);
            self.text(x - 8.0, y + 4.0, &fmt_tick(t), "end", 11.0);
        }
        let cy = (scale.px_lo + scale.px_hi) / 2.0;
        self.text_rotated(20.0, cy, label, 13.0);
    }

    pub fn legend(&mut self, entries: &[(&str, &str)]) {
        let x = self.plot_right() - 150.0;
        let mut y = self.plot_top() + 4.0;
        for (name, color) in entries {
            self.rect(x, y, 12.0, 12.0, color, "");
            self.text(x + 18.0, y + 10.0, name, "start", 11.0);
            y += 18.0;
        }
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// Blue to red through light grey, `t` in [0, 1].
pub fn diverging(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (lo, mid, hi) = ((30.0, 136.0, 229.0), (220.0, 220.0, 220.0), (255.0, 0.0, 82.0));
    let (a, b, u) = if t < 0.5 { (lo, mid, t * 2.0) } else { (mid, hi, (t - 0.5) * 2.0) };
    let mix = |p: f64, q: f64| (p + (q - p) * u).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// White to dark blue, `t` in [0, 1].
pub fn sequential(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let mix = |p: f64, q: f64| (p + (q - p) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(247.0, 8.0), mix(251.0, 48.0), mix(255.0, 107.0))
}

pub const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];
