//! SVG renderings of a [`ShapSummary`]: global bar and beeswarm charts,
//! a decision plot over all explained rows and a single-row waterfall.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::{ExplainError, ShapExplanation, ShapSummary};
use crate::plot::svg::{diverging, fmt_tick, Scale, Svg, PALETTE};
use crate::seed;

const ROW_HEIGHT: f64 = 36.0;
const LABEL_WIDTH: f64 = 230.0;
const POSITIVE: &str = "#ff0052";
const NEGATIVE: &str = "#1e88e5";

#[derive(Debug, Clone, PartialEq)]
pub struct ShapFiles {
    pub bar: PathBuf,
    pub beeswarm: PathBuf,
    pub decision: PathBuf,
    pub waterfall: PathBuf,
}

fn canvas(rows: usize) -> Svg {
    Svg::new(820.0, 110.0 + ROW_HEIGHT * rows as f64)
}

fn row_center(doc: &Svg, k: usize) -> f64 {
    doc.plot_top() + ROW_HEIGHT * (k as f64 + 0.5)
}

fn value_scale(doc: &Svg, lo: f64, hi: f64) -> Scale {
    let pad = 0.05 * (hi - lo).max(1e-6);
    Scale::new(lo - pad, hi + pad, LABEL_WIDTH, doc.plot_right())
}

fn bottom_axis(doc: &mut Svg, scale: &Scale, y: f64, label: &str) {
    doc.line(scale.px_lo, y, scale.px_hi, y, "#333", 1.0);
    for t in scale.ticks(6) {
        let x = scale.map(t);
        doc.line(x, y, x, y + 5.0, "#333", 1.0);
        doc.text(x, y + 18.0, &fmt_tick(t), "middle", 11.0);
    }
    doc.text((scale.px_lo + scale.px_hi) / 2.0, y + 38.0, label, "middle", 13.0);
}

/// Mean |phi| per feature, largest on top.
pub fn bar_svg(summary: &ShapSummary) -> String {
    let order = summary.order();
    let mut doc = canvas(order.len());
    doc.title("Mean |SHAP value| per feature");
    let max = summary.mean_abs.iter().copied().fold(0.0f64, f64::max);
    let xs = Scale::new(0.0, if max > 0.0 { max * 1.1 } else { 1.0 }, LABEL_WIDTH, doc.plot_right());
    for (k, &j) in order.iter().enumerate() {
        let y = row_center(&doc, k);
        let v = summary.mean_abs[j];
        doc.rect(xs.map(0.0), y - ROW_HEIGHT * 0.35, xs.map(v) - xs.map(0.0), ROW_HEIGHT * 0.7, POSITIVE, "");
        doc.text(LABEL_WIDTH - 8.0, y + 4.0, &summary.feature_names[j], "end", 12.0);
        doc.text(xs.map(v) + 4.0, y + 4.0, &format!("{v:.4}"), "start", 11.0);
    }
    let base = row_center(&doc, order.len()) - ROW_HEIGHT * 0.5;
    bottom_axis(&mut doc, &xs, base, "mean |SHAP value|");
    doc.finish()
}

fn standardized(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    values
        .iter()
        .map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 })
        .collect()
}

/// One dot per row and feature at its phi, vertically jittered, colored by
/// the standardized feature value (blue low, red high).
pub fn beeswarm_svg(summary: &ShapSummary, seed: u64) -> String {
    let order = summary.order();
    let mut doc = canvas(order.len());
    doc.title("SHAP values per instance");
    let (lo, hi) = summary
        .explanations
        .iter()
        .flat_map(|e| e.phi.iter().copied())
        .fold((0.0f64, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    let xs = value_scale(&doc, lo, hi);
    let top = doc.plot_top();
    let base = row_center(&doc, order.len()) - ROW_HEIGHT * 0.5;
    doc.line(xs.map(0.0), top, xs.map(0.0), base, "#999", 1.0);
    let mut rng = seed::rng(seed);
    for (k, &j) in order.iter().enumerate() {
        let y = row_center(&doc, k);
        let column: Vec<f64> = summary.explanations.iter().map(|e| e.instance[j]).collect();
        let z = standardized(&column);
        for (e, zj) in summary.explanations.iter().zip(z) {
            let jitter = rng.random_range(-0.3..0.3) * ROW_HEIGHT;
            doc.circle(xs.map(e.phi[j]), y + jitter, 3.0, &diverging(0.5 + zj / 4.0));
        }
        doc.text(LABEL_WIDTH - 8.0, y + 4.0, &summary.feature_names[j], "end", 12.0);
    }
    bottom_axis(&mut doc, &xs, base, "SHAP value (impact on predicted probability)");
    doc.finish()
}

/// Cumulative output per explanation: starts at phi0, adds features from
/// least to most important, ends at fx.
pub fn decision_paths(summary: &ShapSummary) -> Vec<Vec<f64>> {
    let mut order = summary.order();
    order.reverse();
    summary
        .explanations
        .iter()
        .map(|e| {
            let mut acc = e.phi0;
            std::iter::once(acc)
                .chain(order.iter().map(|&j| {
                    acc += e.phi[j];
                    acc
                }))
                .collect()
        })
        .collect()
}

pub fn decision_svg(summary: &ShapSummary) -> String {
    let order = summary.order();
    let d = order.len();
    let mut doc = canvas(d);
    doc.title("SHAP decision plot");
    let paths = decision_paths(summary);
    let (lo, hi) = paths
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let xs = value_scale(&doc, lo, hi);
    let top = doc.plot_top();
    let base = row_center(&doc, d) - ROW_HEIGHT * 0.5;
    // row k from the top holds order[k]; paths climb from the bottom
    for (k, &j) in order.iter().enumerate() {
        let y = row_center(&doc, k);
        doc.line(LABEL_WIDTH, y, doc.plot_right(), y, "#eee", 1.0);
        doc.text(LABEL_WIDTH - 8.0, y + 4.0, &summary.feature_names[j], "end", 12.0);
    }
    let phi0 = summary.explanations[0].phi0;
    doc.line(xs.map(phi0), top, xs.map(phi0), base, "#999", 1.0);
    for (e, path) in summary.explanations.iter().zip(&paths) {
        let pts: Vec<(f64, f64)> = path
            .iter()
            .enumerate()
            .map(|(step, &v)| {
                let y = if step == 0 { base } else { row_center(&doc, d - step) };
                (xs.map(v), y)
            })
            .collect();
        let t = (e.fx - lo) / (hi - lo).max(1e-12);
        doc.polyline(&pts, &diverging(t), 1.2, &format!(r#" data-fx="{:.12}""#, e.fx));
    }
    bottom_axis(&mut doc, &xs, base, "Model output");
    doc.finish()
}

/// `(feature, start, end)` per step in descending |phi| order; the first
/// step starts at phi0 and the last ends at fx.
pub fn waterfall_steps(e: &ShapExplanation) -> Vec<(usize, f64, f64)> {
    let mut idx: Vec<usize> = (0..e.phi.len()).collect();
    idx.sort_by(|&a, &b| e.phi[b].abs().total_cmp(&e.phi[a].abs()).then(a.cmp(&b)));
    let mut acc = e.phi0;
    idx.into_iter()
        .map(|j| {
            let start = acc;
            acc += e.phi[j];
            (j, start, acc)
        })
        .collect()
}

pub fn waterfall_svg(summary: &ShapSummary, instance: usize) -> String {
    let e = &summary.explanations[instance.min(summary.explanations.len() - 1)];
    let steps = waterfall_steps(e);
    let mut doc = canvas(steps.len() + 1);
    doc.title(&format!("SHAP waterfall, instance {instance}"));
    let (lo, hi) = steps
        .iter()
        .flat_map(|s| [s.1, s.2])
        .fold((e.phi0, e.phi0), |(a, b), v| (a.min(v), b.max(v)));
    let xs = value_scale(&doc, lo, hi);
    for (k, &(j, start, end)) in steps.iter().enumerate() {
        let y = row_center(&doc, k);
        let color = if end >= start { POSITIVE } else { NEGATIVE };
        let (a, b) = (xs.map(start.min(end)), xs.map(start.max(end)));
        doc.rect(a, y - ROW_HEIGHT * 0.35, (b - a).max(1.0), ROW_HEIGHT * 0.7, color, "");
        let label = format!("{} = {}", summary.feature_names[j], fmt_tick(e.instance[j]));
        doc.text(LABEL_WIDTH - 8.0, y + 4.0, &label, "end", 12.0);
        doc.text(b + 4.0, y + 4.0, &format!("{:+.3}", end - start), "start", 11.0);
    }
    let top = doc.plot_top();
    let base = row_center(&doc, steps.len()) - ROW_HEIGHT * 0.5;
    doc.line(xs.map(e.fx), top, xs.map(e.fx), base, PALETTE[2], 1.0);
    doc.line(xs.map(e.phi0), top, xs.map(e.phi0), base, "#999", 1.0);
    doc.text(xs.map(e.fx), top - 4.0, &format!("f(x) = {:.3}", e.fx), "middle", 12.0);
    bottom_axis(&mut doc, &xs, base, &format!("Model output (E[f(X)] = {:.3})", e.phi0));
    doc.finish()
}

/// Writes the four charts into `out_dir`.
pub fn render_shap(summary: &ShapSummary, out_dir: &Path, seed: u64, instance: usize) -> Result<ShapFiles, ExplainError> {
    if summary.explanations.is_empty() {
        return Err(ExplainError::NoExplanations);
    }
    fs::create_dir_all(out_dir)?;
    let files = ShapFiles {
        bar: out_dir.join("shap_bar.svg"),
        beeswarm: out_dir.join("shap_beeswarm.svg"),
        decision: out_dir.join("shap_decision.svg"),
        waterfall: out_dir.join("shap_waterfall.svg"),
    };
    fs::write(&files.bar, bar_svg(summary))?;
    fs::write(&files.beeswarm, beeswarm_svg(summary, seed))?;
    fs::write(&files.decision, decision_svg(summary))?;
    fs::write(&files.waterfall, waterfall_svg(summary, instance))?;
    Ok(files)
}
