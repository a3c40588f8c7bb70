//! All-relevant feature selection: each real feature competes against
//! permuted shadow copies inside a random forest.

use ndarray::{concatenate, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{EncodedMatrix, LabelVector};
use crate::models::{FeatureSubset, HyperParams, RandomForest};
use crate::models::tree::Tree;
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum BorutaError {
    #[error("invalid Boruta configuration: {0}")]
    InvalidConfig(String),
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("both classes must be present")]
    SingleClass,
    #[error("no feature was confirmed")]
    EmptySelection,
    #[error("decision covers {decision:?} but the matrix has {matrix:?}")]
    FeatureMismatch { decision: Vec<String>, matrix: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportanceKind {
    /// Mean impurity decrease, normalized per forest.
    Gini,
    /// Drop in training accuracy after permuting the column.
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BorutaConfig {
    pub max_iterations: usize,
    pub alpha: f64,
    /// Must be the RANDOM_FOREST variant.
    pub forest_hp: HyperParams,
    pub importance: ImportanceKind,
    pub seed: u64,
}

impl Default for BorutaConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            alpha: 0.05,
            forest_hp: HyperParams::RandomForest {
                n_trees: 300,
                max_depth: None,
                feature_subset: FeatureSubset::Sqrt,
                bootstrap: true,
            },
            importance: ImportanceKind::Gini,
            seed: 0,
        }
    }
}

impl BorutaConfig {
    pub fn validate(&self) -> Result<(), BorutaError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(BorutaError::InvalidConfig(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.max_iterations < 10 {
            return Err(BorutaError::InvalidConfig("max_iterations must be >= 10".into()));
        }
        if !matches!(self.forest_hp, HyperParams::RandomForest { .. }) {
            return Err(BorutaError::InvalidConfig("forest_hp must be a RANDOM_FOREST entry".into()));
        }
        self.forest_hp
            .validate()
            .map_err(|e| BorutaError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Confirmed,
    Rejected,
    Tentative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDecision {
    pub features: Vec<String>,
    /// Final status after tentative features were resolved.
    pub status: Vec<Status>,
    /// True for features still tentative when the iteration budget ran out.
    pub resolved_from_tentative: Vec<bool>,
    /// Iteration (1-based) at which the hit test decided the feature.
    pub decided_at: Vec<Option<usize>>,
    pub hit_counts: Vec<usize>,
    /// Importance of each feature in every iteration it took part in.
    pub importance_history: Vec<Vec<f64>>,
    /// Largest shadow importance per iteration.
    pub shadow_max_history: Vec<f64>,
    pub iterations: usize,
}

impl FeatureDecision {
    pub fn confirmed(&self) -> Vec<String> {
        self.features
            .iter()
            .zip(&self.status)
            .filter(|(_, s)| **s == Status::Confirmed)
            .map(|(f, _)| f.clone())
            .collect()
    }

    pub fn status_of(&self, feature: &str) -> Option<Status> {
        self.features.iter().position(|f| f == feature).map(|i| self.status[i])
    }
}

/// ln P(X = k) for X ~ Binomial(n, 1/2), for all k.
fn binomial_half_log_pmf(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut lp = n as f64 * 0.5f64.ln();
    out.push(lp);
    for k in 0..n {
        lp += ((n - k) as f64 / (k + 1) as f64).ln();
        out.push(lp);
    }
    out
}

/// Two-sided binomial p-value for `hits` successes in `n` fair trials.
pub fn binomial_two_sided(hits: usize, n: usize) -> (f64, f64) {
    let pmf: Vec<f64> = binomial_half_log_pmf(n).into_iter().map(f64::exp).collect();
    let upper: f64 = pmf[hits..].iter().sum();
    let lower: f64 = pmf[..=hits].iter().sum();
    (upper.min(1.0), lower.min(1.0))
}

fn shadow_block(x: &Array2<f64>, cols: &[usize], rng: &mut impl rand::Rng) -> Array2<f64> {
    let mut out = x.select(Axis(1), cols);
    for mut col in out.axis_iter_mut(Axis(1)) {
        let mut v = col.to_vec();
        v.shuffle(rng);
        col.assign(&ndarray::Array1::from(v));
    }
    out
}

fn forest_accuracy(trees: &[Tree], x: &Array2<f64>, y: &[u8]) -> f64 {
    let forest = RandomForest { trees: trees.to_vec() };
    let hits = x
        .rows()
        .into_iter()
        .zip(y)
        .filter(|(row, &l)| u8::from(forest.proba(&row.to_vec()) > 0.5) == l)
        .count();
    hits as f64 / y.len() as f64
}

fn permutation_importance(forest: &RandomForest, x: &Array2<f64>, y: &[u8], rng: &mut impl rand::Rng) -> Vec<f64> {
    let base = forest_accuracy(&forest.trees, x, y);
    (0..x.ncols())
        .map(|j| {
            let mut xp = x.clone();
            let mut col = xp.column(j).to_vec();
            col.shuffle(rng);
            xp.column_mut(j).assign(&ndarray::Array1::from(col));
            base - forest_accuracy(&forest.trees, &xp, y)
        })
        .collect()
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// At least this many shadow columns take part in every forest; the shadow
/// block is repeated when fewer features remain.
const MIN_SHADOWS: usize = 5;

/// Runs the shadow-feature procedure. Every feature not yet rejected gets a
/// permuted copy each iteration; decisions use Bonferroni-corrected binomial
/// tests on cumulative hits.
pub fn boruta_select(x: &EncodedMatrix, y: &LabelVector, cfg: &BorutaConfig) -> Result<FeatureDecision, BorutaError> {
    cfg.validate()?;
    if x.n_rows() != y.len() {
        return Err(BorutaError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    let [neg, pos] = y.class_counts();
    if neg == 0 || pos == 0 {
        return Err(BorutaError::SingleClass);
    }
    let HyperParams::RandomForest {
        n_trees,
        max_depth,
        feature_subset,
        bootstrap,
    } = cfg.forest_hp
    else {
        unreachable!("validated above")
    };
    let d = x.n_cols();
    let labels = y.as_slice();
    let mut status = vec![Status::Tentative; d];
    let mut decided_at = vec![None; d];
    let mut hits = vec![0usize; d];
    let mut history: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut shadow_max_history = Vec::new();
    let mut iterations = 0;

    for it in 0..cfg.max_iterations {
        if status.iter().all(|s| *s != Status::Tentative) {
            break;
        }
        iterations = it + 1;
        let mut rng = seed::rng(seed::derive_indexed(cfg.seed, "boruta/shadow", it as u64));
        let active: Vec<usize> = (0..d).filter(|&j| status[j] != Status::Rejected).collect();
        let real = x.values.select(Axis(1), &active);
        let mut shadow_cols = active.clone();
        while shadow_cols.len() < MIN_SHADOWS {
            shadow_cols.extend_from_within(..);
        }
        let shadows = shadow_block(&x.values, &shadow_cols, &mut rng);
        let joined = concatenate(Axis(1), &[real.view(), shadows.view()]).expect("row counts agree");
        let params = crate::models::forest::ForestParams {
            n_trees,
            max_depth,
            max_features: feature_subset.resolve(joined.ncols()),
            bootstrap,
        };
        let forest_seed = seed::derive_indexed(cfg.seed, "boruta/forest", it as u64);
        let forest = RandomForest::fit(joined.view(), labels, &params, forest_seed);
        let importance = match cfg.importance {
            ImportanceKind::Gini => forest.feature_importance(),
            ImportanceKind::Permutation => permutation_importance(&forest, &joined, labels, &mut rng),
        };
        let k = active.len();
        let shadow_max = importance[k..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        shadow_max_history.push(shadow_max);
        for (slot, &j) in active.iter().enumerate() {
            history[j].push(importance[slot]);
            if importance[slot] > shadow_max {
                hits[j] += 1;
            }
        }
        let runs = it + 1;
        for j in 0..d {
            if status[j] != Status::Tentative {
                continue;
            }
            let (upper, lower) = binomial_two_sided(hits[j], runs);
            // two-sided test: double the smaller tail, then Bonferroni over d
            let corrected = |p: f64| (2.0 * p * d as f64).min(1.0);
            if corrected(upper) < cfg.alpha && upper < lower {
                status[j] = Status::Confirmed;
                decided_at[j] = Some(runs);
            } else if corrected(lower) < cfg.alpha && lower < upper {
                status[j] = Status::Rejected;
                decided_at[j] = Some(runs);
            }
        }
    }

    let shadow_median = median(&shadow_max_history);
    let mut resolved_from_tentative = vec![false; d];
    for j in 0..d {
        if status[j] == Status::Tentative {
            resolved_from_tentative[j] = true;
            status[j] = if median(&history[j]) > shadow_median {
                Status::Confirmed
            } else {
                Status::Rejected
            };
        }
    }
    Ok(FeatureDecision {
        features: x.feature_names.clone(),
        status,
        resolved_from_tentative,
        decided_at,
        hit_counts: hits,
        importance_history: history,
        shadow_max_history,
        iterations,
    })
}

/// Keeps the confirmed columns in their original order.
pub fn reduce(x: &EncodedMatrix, decision: &FeatureDecision) -> Result<EncodedMatrix, BorutaError> {
    if x.feature_names != decision.features {
        return Err(BorutaError::FeatureMismatch {
            decision: decision.features.clone(),
            matrix: x.feature_names.clone(),
        });
    }
    let keep: Vec<usize> = (0..x.n_cols())
        .filter(|&j| decision.status[j] == Status::Confirmed)
        .collect();
    if keep.is_empty() {
        return Err(BorutaError::EmptySelection);
    }
    Ok(x.select_columns(&keep))
}
