//! Hand-written SVG figures. Output is a pure function of the inputs and the
//! [`Style`]; coordinates are printed with two decimals.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::metrics::{ComparisonResult, LayerCurve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Style {
    pub width: f64,
    pub height: f64,
    pub font_family: String,
    pub font_size: f64,
    /// Line colors, cycled per curve.
    pub palette: Vec<String>,
    pub positive: String,
    pub negative: String,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            width: 640.0,
            height: 400.0,
            font_family: "sans-serif".into(),
            font_size: 12.0,
            palette: ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]
                .map(String::from)
                .to_vec(),
            positive: "#2ca02c".into(),
            negative: "#d62728".into(),
        }
    }
}

const LEFT: f64 = 60.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Smallest value of the form {1, 2, 2.5, 5} × 10^n that is `>= x`.
fn nice_ceil(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(x.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|v| *v >= x * (1.0 - 1e-12))
        .unwrap_or(10.0 * mag)
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

struct Frame<'a> {
    style: &'a Style,
    layers: usize,
    y_lo: f64,
    y_hi: f64,
}

impl Frame<'_> {
    fn plot_w(&self) -> f64 {
        self.style.width - LEFT - RIGHT
    }

    fn plot_h(&self) -> f64 {
        self.style.height - TOP - BOTTOM
    }

    fn y(&self, v: f64) -> f64 {
        TOP + (self.y_hi - v) / (self.y_hi - self.y_lo) * self.plot_h()
    }

    /// Center of layer slot `l` (1-based).
    fn x(&self, l: usize) -> f64 {
        LEFT + (l as f64 - 0.5) / self.layers as f64 * self.plot_w()
    }

    fn open(&self, out: &mut String, title: &str, y_label: &str) {
        let s = self.style;
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="{f}" font-size="{fs}">"#,
            w = s.width,
            h = s.height,
            f = esc(&s.font_family),
            fs = s.font_size
        );
        let _ = writeln!(out, r#"<rect width="{}" height="{}" fill="white"/>"#, s.width, s.height);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="20" text-anchor="middle" font-weight="bold">{}</text>"#,
            LEFT + self.plot_w() / 2.0,
            esc(title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Layer</text>"#,
            LEFT + self.plot_w() / 2.0,
            s.height - 10.0
        );
        let _ = writeln!(
            out,
            r#"<text x="15" y="{y:.2}" text-anchor="middle" transform="rotate(-90 15 {y:.2})">{}</text>"#,
            esc(y_label),
            y = TOP + self.plot_h() / 2.0
        );
        // y ticks and grid
        let steps = 5;
        for i in 0..=steps {
            let v = self.y_lo + (self.y_hi - self.y_lo) * i as f64 / steps as f64;
            let y = self.y(v);
            let _ = writeln!(
                out,
                r##"<line class="grid" x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
                LEFT + self.plot_w()
            );
            let _ = writeln!(
                out,
                r#"<text class="ytick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                tick_label(v)
            );
        }
        // x ticks: every layer up to 24, otherwise about a dozen labels
        let every = self.layers.div_ceil(24).max(1);
        for l in (1..=self.layers).filter(|l| (l - 1) % every == 0) {
            let _ = writeln!(
                out,
                r#"<text class="xtick" x="{:.2}" y="{:.2}" text-anchor="middle">{l}</text>"#,
                self.x(l),
                TOP + self.plot_h() + 16.0
            );
        }
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            self.plot_w(),
            self.plot_h()
        );
    }
}

fn legend(out: &mut String, style: &Style, entries: &[(String, String)]) {
    let x = style.width - RIGHT + 12.0;
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
            x + 20.0
        );
        let _ = writeln!(
            out,
            r#"<text class="legend" x="{:.2}" y="{:.2}">{}</text>"#,
            x + 26.0,
            y + 4.0,
            esc(label)
        );
    }
}

/// Line chart, one line per curve, labeled by task tag (plus model id when
/// two curves share a tag).
pub fn render_curves(curves: &[&LayerCurve<f64>], style: &Style) -> Result<String, ReportError> {
    let first = curves.first().ok_or(ReportError::EmptySelection)?;
    let layers = first.layers();
    if layers == 0 {
        return Err(ReportError::EmptySelection);
    }
    if let Some(c) = curves
        .iter()
        .find(|c| c.layers() != layers || c.metric_kind != first.metric_kind)
    {
        return Err(ReportError::Incompatible(format!(
            "{} ({} layers, {}) vs {} ({layers} layers, {})",
            c.model_id,
            c.layers(),
            c.metric_kind,
            first.model_id,
            first.metric_kind
        )));
    }
    let max = curves
        .iter()
        .flat_map(|c| c.values.iter().copied())
        .fold(0.0f64, f64::max);
    let frame = Frame {
        style,
        layers,
        y_lo: 0.0,
        y_hi: nice_ceil(max * 1.05),
    };
    let mut out = String::new();
    frame.open(
        &mut out,
        &format!("{} / {} / {}", first.corpus, first.mwe_type, first.metric_kind),
        "Attention (%)",
    );
    let mut entries = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        let color = style.palette[i % style.palette.len().max(1)].clone();
        let shared = curves.iter().filter(|o| o.task_tag == c.task_tag).count() > 1;
        let label = if shared {
            format!("{} ({})", c.task_tag.label(), c.model_id)
        } else {
            c.task_tag.label().to_string()
        };
        let points: Vec<String> = c
            .values
            .iter()
            .enumerate()
            .map(|(l, v)| format!("{:.2},{:.2}", frame.x(l + 1), frame.y(*v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="curve" data-model="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            esc(&c.model_id),
            points.join(" ")
        );
        entries.push((label, color));
    }
    legend(&mut out, style, &entries);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Signed bars per layer around a zero axis; zero deltas give zero-height
/// bars.
pub fn render_deltas(c: &ComparisonResult<f64>, style: &Style) -> Result<String, ReportError> {
    let layers = c.deltas.len();
    if layers == 0 {
        return Err(ReportError::EmptySelection);
    }
    let m = nice_ceil(c.deltas.iter().fold(0.0f64, |a, d| a.max(d.abs())) * 1.05);
    let frame = Frame {
        style,
        layers,
        y_lo: -m,
        y_hi: m,
    };
    let mut out = String::new();
    frame.open(
        &mut out,
        &format!(
            "{} vs {}: {} / {} / {}",
            c.tuned.task_tag.label(),
            c.baseline.task_tag.label(),
            c.tuned.corpus,
            c.tuned.mwe_type,
            c.tuned.metric_kind
        ),
        "Change in attention (pp)",
    );
    let y0 = frame.y(0.0);
    let _ = writeln!(
        out,
        r#"<line class="zero" x1="{LEFT:.2}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="black"/>"#,
        LEFT + frame.plot_w()
    );
    let bw = frame.plot_w() / layers as f64 * 0.7;
    for (i, d) in c.deltas.iter().enumerate() {
        let y = frame.y(*d);
        let (top, h) = if *d >= 0.0 { (y, y0 - y) } else { (y0, y - y0) };
        let color = if *d >= 0.0 { &style.positive } else { &style.negative };
        let _ = writeln!(
            out,
            r#"<rect class="bar" data-layer="{}" x="{:.2}" y="{top:.2}" width="{bw:.2}" height="{h:.2}" fill="{color}"/>"#,
            i + 1,
            frame.x(i + 1) - bw / 2.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
