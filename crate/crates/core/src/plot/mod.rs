//! Self-contained SVG charts for the workflow's figures.
//!
//! Every function returns the document as a string; writing it to disk is
//! the caller's job. Layout depends only on the inputs.

pub mod svg;

use ndarray::Axis;

use crate::bayes::{PredictiveDraws, Uncertainty};
use crate::boruta::{FeatureDecision, Status};
use crate::models::ConfusionMatrix;
use svg::{sequential, Scale, Svg, PALETTE};

/// Equal-width histogram with `bins` bars over the data range.
pub fn histogram(values: &[f64], bins: usize, title: &str, x_label: &str) -> String {
    let mut doc = Svg::standard();
    doc.title(title);
    let bins = bins.max(1);
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if values.is_empty() { (0.0, 1.0) } else { (lo, hi) };
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let xs = Scale::new(lo, lo + width * bins as f64, doc.plot_left(), doc.plot_right());
    let max = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let ys = Scale::new(0.0, max * 1.05, doc.plot_bottom(), doc.plot_top());
    for (b, &c) in counts.iter().enumerate() {
        let x0 = xs.map(lo + width * b as f64);
        let x1 = xs.map(lo + width * (b + 1) as f64);
        let y = ys.map(c as f64);
        doc.rect(x0, y, x1 - x0, ys.map(0.0) - y, PALETTE[0], r##" stroke="white""##);
    }
    doc.x_axis(&xs, x_label);
    doc.y_axis(&ys, "Count");
    doc.finish()
}

/// 2x2 confusion matrix with actual classes as rows.
pub fn confusion_heatmap(cm: &ConfusionMatrix, title: &str, negative: &str, positive: &str) -> String {
    let mut doc = Svg::new(420.0, 400.0);
    doc.title(title);
    let cells = [[cm.tn, cm.fp], [cm.fn_, cm.tp]];
    let max = cells.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let (x0, y0, size) = (120.0, 60.0, 130.0);
    let names = [negative, positive];
    for (r, row) in cells.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            let t = count as f64 / max;
            let x = x0 + c as f64 * size;
            let y = y0 + r as f64 * size;
            doc.rect(x, y, size, size, &sequential(t), r##" stroke="#333""##);
            let ink = if t > 0.55 { "white" } else { "black" };
            doc.text_fill(x + size / 2.0, y + size / 2.0 + 8.0, &count.to_string(), 22.0, ink);
        }
        doc.text(x0 - 10.0, y0 + r as f64 * size + size / 2.0 + 4.0, names[r], "end", 12.0);
        doc.text(x0 + r as f64 * size + size / 2.0, y0 + 2.0 * size + 20.0, names[r], "middle", 12.0);
    }
    doc.text(x0 + size, y0 + 2.0 * size + 42.0, "Predicted", "middle", 13.0);
    doc.text_rotated(24.0, y0 + size, "Actual", 13.0);
    doc.finish()
}

/// Vertical bars grouped by category, one series per legend entry.
pub fn grouped_bars(groups: &[String], series: &[(String, Vec<f64>)], title: &str, y_label: &str) -> String {
    let mut doc = Svg::new(820.0, 460.0);
    doc.title(title);
    let max = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(0.0f64, f64::max);
    let ys = Scale::new(0.0, if max > 0.0 { max * 1.1 } else { 1.0 }, doc.plot_bottom(), doc.plot_top());
    let slot = (doc.plot_right() - doc.plot_left()) / groups.len().max(1) as f64;
    let bar = slot * 0.8 / series.len().max(1) as f64;
    for (g, name) in groups.iter().enumerate() {
        let left = doc.plot_left() + g as f64 * slot + slot * 0.1;
        for (s, (_, values)) in series.iter().enumerate() {
            if let Some(&v) = values.get(g) {
                let y = ys.map(v);
                doc.rect(left + s as f64 * bar, y, bar, ys.map(0.0) - y, PALETTE[s % PALETTE.len()], "");
            }
        }
        doc.text(left + slot * 0.4, doc.plot_bottom() + 18.0, name, "middle", 11.0);
    }
    let base = doc.plot_bottom();
    doc.line(doc.plot_left(), base, doc.plot_right(), base, "#333", 1.0);
    doc.y_axis(&ys, y_label);
    let legend: Vec<(&str, &str)> = series
        .iter()
        .enumerate()
        .map(|(s, (n, _))| (n.as_str(), PALETTE[s % PALETTE.len()]))
        .collect();
    doc.legend(&legend);
    doc.finish()
}

/// Quartiles by linear interpolation between order statistics.
pub fn quartiles(values: &[f64]) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let i = h.floor() as usize;
        let j = (i + 1).min(v.len() - 1);
        v[i] + (h - i as f64) * (v[j] - v[i])
    };
    Some([v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]])
}

fn status_color(s: Status) -> &'static str {
    match s {
        Status::Confirmed => "#55a868",
        Status::Tentative => "#e1b12c",
        Status::Rejected => "#c44e52",
    }
}

/// Importance box per feature across iterations, colored by final status,
/// sorted by median; the shadow maximum is drawn last in blue.
pub fn boruta_boxes(decision: &FeatureDecision, title: &str) -> String {
    let mut entries: Vec<(String, [f64; 5], &str)> = decision
        .features
        .iter()
        .zip(&decision.importance_history)
        .zip(&decision.status)
        .filter_map(|((f, h), s)| quartiles(h).map(|q| (f.clone(), q, status_color(*s))))
        .collect();
    entries.sort_by(|a, b| a.1[2].total_cmp(&b.1[2]));
    if let Some(q) = quartiles(&decision.shadow_max_history) {
        entries.push(("shadowMax".into(), q, PALETTE[0]));
    }
    let mut doc = Svg::new(900.0, 520.0);
    doc.title(title);
    let max = entries.iter().map(|e| e.1[4]).fold(0.0f64, f64::max);
    let min = entries.iter().map(|e| e.1[0]).fold(0.0f64, f64::min);
    let bottom = doc.plot_bottom() - 60.0;
    let ys = Scale::new(min, if max > min { max * 1.05 } else { min + 1.0 }, bottom, doc.plot_top());
    let slot = (doc.plot_right() - doc.plot_left()) / entries.len().max(1) as f64;
    for (k, (name, q, color)) in entries.iter().enumerate() {
        let cx = doc.plot_left() + (k as f64 + 0.5) * slot;
        let half = slot * 0.3;
        doc.line(cx, ys.map(q[0]), cx, ys.map(q[4]), "#333", 1.0);
        doc.rect(cx - half, ys.map(q[3]), 2.0 * half, ys.map(q[1]) - ys.map(q[3]), color, r##" stroke="#333""##);
        doc.line(cx - half, ys.map(q[2]), cx + half, ys.map(q[2]), "#111", 2.0);
        let ly = bottom + 12.0;
        doc.text_rotated_at(cx, ly, name);
    }
    doc.line(doc.plot_left(), bottom, doc.plot_right(), bottom, "#333", 1.0);
    let axis = Scale { px_lo: bottom, ..ys };
    doc.y_axis(&axis, "Importance");
    doc.finish()
}

/// Posterior predictive mean over test rows sorted by mean, with
/// `mean ± sqrt(epistemic)` and `mean ± sqrt(aleatoric)` bands.
pub fn uncertainty_bands(series: &[Uncertainty], title: &str) -> String {
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by(|&a, &b| series[a].mean.total_cmp(&series[b].mean).then(a.cmp(&b)));
    let mut doc = Svg::standard();
    doc.title(title);
    let xs = Scale::new(0.0, series.len().saturating_sub(1) as f64, doc.plot_left(), doc.plot_right());
    let ys = Scale::new(-0.1, 1.1, doc.plot_bottom(), doc.plot_top());
    let band = |f: fn(&Uncertainty) -> f64| -> Vec<(f64, f64)> {
        let upper = order
            .iter()
            .enumerate()
            .map(|(k, &i)| (xs.map(k as f64), ys.map(series[i].mean + f(&series[i]).sqrt())));
        let lower = order
            .iter()
            .enumerate()
            .rev()
            .map(|(k, &i)| (xs.map(k as f64), ys.map(series[i].mean - f(&series[i]).sqrt())));
        upper.chain(lower).collect()
    };
    doc.polygon(&band(|u| u.aleatoric), PALETTE[1], 0.25);
    doc.polygon(&band(|u| u.epistemic), PALETTE[0], 0.45);
    let line: Vec<(f64, f64)> = order
        .iter()
        .enumerate()
        .map(|(k, &i)| (xs.map(k as f64), ys.map(series[i].mean)))
        .collect();
    doc.polyline(&line, "#111", 1.5, "");
    doc.x_axis(&xs, "Test instance (sorted by predictive mean)");
    doc.y_axis(&ys, "Probability of recurrence");
    doc.legend(&[("mean ± sd (epistemic)", PALETTE[0]), ("mean ± sd (aleatoric)", PALETTE[1])]);
    doc.finish()
}

/// Per-row central interval of the draws at `level` (e.g. 0.9), by linear
/// interpolation between order statistics. Returns `(lower, upper)`.
pub fn predictive_interval(draws: &PredictiveDraws, level: f64) -> Vec<(f64, f64)> {
    let tail = (1.0 - level.clamp(0.0, 1.0)) / 2.0;
    draws
        .probs
        .axis_iter(Axis(1))
        .map(|col| {
            let mut v = col.to_vec();
            v.sort_by(f64::total_cmp);
            let at = |p: f64| {
                let h = p * (v.len() - 1) as f64;
                let i = h.floor() as usize;
                let j = (i + 1).min(v.len() - 1);
                v[i] + (h - i as f64) * (v[j] - v[i])
            };
            (at(tail), at(1.0 - tail))
        })
        .collect()
}

/// Predictive mean over sorted test rows with a shaded central interval.
pub fn interval_band(series: &[Uncertainty], interval: &[(f64, f64)], level: f64, title: &str) -> String {
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by(|&a, &b| series[a].mean.total_cmp(&series[b].mean).then(a.cmp(&b)));
    let mut doc = Svg::standard();
    doc.title(title);
    let xs = Scale::new(0.0, series.len().saturating_sub(1) as f64, doc.plot_left(), doc.plot_right());
    let ys = Scale::new(-0.1, 1.1, doc.plot_bottom(), doc.plot_top());
    let upper = order.iter().enumerate().map(|(k, &i)| (xs.map(k as f64), ys.map(interval[i].1)));
    let lower = order.iter().enumerate().rev().map(|(k, &i)| (xs.map(k as f64), ys.map(interval[i].0)));
    doc.polygon(&upper.chain(lower).collect::<Vec<_>>(), PALETTE[0], 0.35);
    let line: Vec<(f64, f64)> = order
        .iter()
        .enumerate()
        .map(|(k, &i)| (xs.map(k as f64), ys.map(series[i].mean)))
        .collect();
    doc.polyline(&line, "#111", 1.5, "");
    doc.x_axis(&xs, "Test instance (sorted by predictive mean)");
    doc.y_axis(&ys, "Probability of recurrence");
    let label = format!("{:.0}% interval", level * 100.0);
    doc.legend(&[(label.as_str(), PALETTE[0])]);
    doc.finish()
}
