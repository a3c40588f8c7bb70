//! Exact Shapley attributions by coalition enumeration.
//!
//! The value of a coalition S is the mean model output over background rows
//! with features in S taken from the explained instance and the rest from the
//! background row (interventional expectation). All 2^d coalition values are
//! computed once per instance, so cost is O(2^d * B) model evaluations.

pub mod render;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::{net, BayesError, PosteriorSampleSet};
use crate::data::EncodedMatrix;
use crate::models::TrainedClassifier;
use crate::seed;

pub use render::{render_shap, ShapFiles};

/// Largest feature count accepted by [`exact_shap`].
pub const MAX_FEATURES: usize = 20;
/// Composed rows evaluated per model call.
const ROWS_PER_BATCH: usize = 1 << 15;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("exact enumeration supports at most {MAX_FEATURES} features, got {0}")]
    TooManyFeatures(usize),
    #[error("model returned a non-finite output for coalition {coalition:#b}")]
    NonFiniteModelOutput { coalition: u64 },
    #[error("expected {expected} features, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("background set is empty")]
    EmptyBackground,
    #[error("nothing to explain")]
    NoExplanations,
    #[error("model features {expected:?} differ from data features {found:?}")]
    FeatureMismatch { expected: Vec<String>, found: Vec<String> },
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Anything that maps feature rows to class-1 probabilities.
pub trait ProbabilityModel: Sync {
    fn n_features(&self) -> usize;
    /// One output per row of `rows`.
    fn predict_rows(&self, rows: ArrayView2<'_, f64>) -> Vec<f64>;
}

impl ProbabilityModel for TrainedClassifier {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn predict_rows(&self, rows: ArrayView2<'_, f64>) -> Vec<f64> {
        rows.axis_iter(Axis(0))
            .map(|r| match r.as_slice() {
                Some(s) => self.proba_row(s),
                None => self.proba_row(&r.to_vec()),
            })
            .collect()
    }
}

/// Wraps a row function.
pub struct FnModel<F> {
    pub n_features: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> ProbabilityModel for FnModel<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_rows(&self, rows: ArrayView2<'_, f64>) -> Vec<f64> {
        rows.axis_iter(Axis(0)).map(|r| (self.f)(&r.to_vec())).collect()
    }
}

/// Posterior-predictive mean of a sampled network.
pub struct PosteriorMeanModel {
    weights: Vec<Vec<f64>>,
    n_features: usize,
}

impl PosteriorMeanModel {
    pub fn new(samples: &PosteriorSampleSet) -> Self {
        Self {
            weights: (0..samples.n_draws()).map(|s| samples.weights(s)).collect(),
            n_features: samples.feature_names.len(),
        }
    }

    pub fn n_draws(&self) -> usize {
        self.weights.len()
    }
}

impl ProbabilityModel for PosteriorMeanModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_rows(&self, rows: ArrayView2<'_, f64>) -> Vec<f64> {
        let mut acc = vec![0.0; rows.nrows()];
        for w in &self.weights {
            for (a, p) in acc.iter_mut().zip(net::forward_batch(w, rows)) {
                *a += p;
            }
        }
        let n = self.weights.len() as f64;
        acc.into_iter().map(|a| a / n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    /// Value of the empty coalition.
    pub phi0: f64,
    pub phi: Vec<f64>,
    pub instance: Vec<f64>,
    /// Value of the full coalition.
    pub fx: f64,
}

impl ShapExplanation {
    pub fn efficiency_gap(&self) -> f64 {
        (self.phi0 + self.phi.iter().sum::<f64>() - self.fx).abs()
    }
}

/// `1 / (d * C(d-1, s))` for s = 0..d.
fn coalition_weights(d: usize) -> Vec<f64> {
    let mut binom = 1.0f64;
    (0..d)
        .map(|s| {
            if s > 0 {
                binom = binom * (d - s) as f64 / s as f64;
            }
            1.0 / (d as f64 * binom)
        })
        .collect()
}

/// Mean model output for every coalition bitmask.
fn coalition_values(model: &dyn ProbabilityModel, x: &[f64], bg: ArrayView2<'_, f64>) -> Result<Vec<f64>, ExplainError> {
    let d = x.len();
    let b = bg.nrows();
    let n_masks = 1usize << d;
    let per_batch = (ROWS_PER_BATCH / b).max(1);
    let mut values = Vec::with_capacity(n_masks);
    let mut start = 0;
    while start < n_masks {
        let end = (start + per_batch).min(n_masks);
        let mut rows = Array2::zeros(((end - start) * b, d));
        for mask in start..end {
            for (r, bg_row) in bg.axis_iter(Axis(0)).enumerate() {
                let mut row = rows.row_mut((mask - start) * b + r);
                for j in 0..d {
                    row[j] = if mask >> j & 1 == 1 { x[j] } else { bg_row[j] };
                }
            }
        }
        let out = model.predict_rows(rows.view());
        for (k, chunk) in out.chunks(b).enumerate() {
            let v = chunk.iter().sum::<f64>() / b as f64;
            if !v.is_finite() {
                return Err(ExplainError::NonFiniteModelOutput {
                    coalition: (start + k) as u64,
                });
            }
            values.push(v);
        }
        start = end;
    }
    Ok(values)
}

/// Shapley values of one instance against a background set.
pub fn exact_shap(model: &dyn ProbabilityModel, x: &[f64], bg: ArrayView2<'_, f64>) -> Result<ShapExplanation, ExplainError> {
    let d = x.len();
    if d > MAX_FEATURES {
        return Err(ExplainError::TooManyFeatures(d));
    }
    if model.n_features() != d {
        return Err(ExplainError::DimMismatch {
            expected: model.n_features(),
            found: d,
        });
    }
    if bg.ncols() != d {
        return Err(ExplainError::DimMismatch {
            expected: d,
            found: bg.ncols(),
        });
    }
    if bg.nrows() == 0 {
        return Err(ExplainError::EmptyBackground);
    }
    let v = coalition_values(model, x, bg)?;
    let w = coalition_weights(d);
    let phi = (0..d)
        .map(|i| {
            let bit = 1usize << i;
            (0..v.len())
                .filter(|m| m & bit == 0)
                .map(|m| w[m.count_ones() as usize] * (v[m | bit] - v[m]))
                .sum()
        })
        .collect();
    Ok(ShapExplanation {
        phi0: v[0],
        phi,
        instance: x.to_vec(),
        fx: v[v.len() - 1],
    })
}

/// Explains every row of `x`, in parallel across rows.
pub fn explain_rows(model: &dyn ProbabilityModel, x: ArrayView2<'_, f64>, bg: ArrayView2<'_, f64>) -> Result<Vec<ShapExplanation>, ExplainError> {
    if x.ncols() > MAX_FEATURES {
        return Err(ExplainError::TooManyFeatures(x.ncols()));
    }
    (0..x.nrows())
        .into_par_iter()
        .map(|i| exact_shap(model, &x.row(i).to_vec(), bg))
        .collect()
}

/// Explains the posterior-predictive mean, using at most `max_draws` evenly
/// thinned draws (0 keeps all).
pub fn explain_bnn(
    samples: &PosteriorSampleSet,
    x: &EncodedMatrix,
    bg: ArrayView2<'_, f64>,
    max_draws: usize,
) -> Result<Vec<ShapExplanation>, ExplainError> {
    if samples.feature_names != x.feature_names {
        return Err(ExplainError::FeatureMismatch {
            expected: samples.feature_names.clone(),
            found: x.feature_names.clone(),
        });
    }
    let model = PosteriorMeanModel::new(&samples.thinned(max_draws));
    explain_rows(&model, x.values.view(), bg)
}

/// `min(size, n)` rows drawn without replacement, kept in original order.
pub fn background(x: ArrayView2<'_, f64>, size: usize, seed: u64) -> Array2<f64> {
    let n = x.nrows();
    if n <= size {
        return x.to_owned();
    }
    let mut idx = index::sample(&mut seed::rng(seed), n, size).into_vec();
    idx.sort_unstable();
    x.select(Axis(0), &idx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary {
    pub feature_names: Vec<String>,
    pub explanations: Vec<ShapExplanation>,
    /// Mean |phi| per feature, in feature order.
    pub mean_abs: Vec<f64>,
    /// Feature names by descending mean |phi|; ties keep feature order.
    pub ranking: Vec<String>,
}

impl ShapSummary {
    pub fn new(feature_names: Vec<String>, explanations: Vec<ShapExplanation>) -> Result<Self, ExplainError> {
        if explanations.is_empty() {
            return Err(ExplainError::NoExplanations);
        }
        let d = feature_names.len();
        if let Some(e) = explanations.iter().find(|e| e.phi.len() != d) {
            return Err(ExplainError::DimMismatch {
                expected: d,
                found: e.phi.len(),
            });
        }
        let n = explanations.len() as f64;
        let mean_abs: Vec<f64> = (0..d)
            .map(|j| explanations.iter().map(|e| e.phi[j].abs()).sum::<f64>() / n)
            .collect();
        let ranking = rank_desc(&mean_abs).into_iter().map(|j| feature_names[j].clone()).collect();
        Ok(Self {
            feature_names,
            explanations,
            mean_abs,
            ranking,
        })
    }

    /// Feature indices by descending mean |phi|.
    pub fn order(&self) -> Vec<usize> {
        rank_desc(&self.mean_abs)
    }
}

fn rank_desc(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn fn_model(d: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> FnModel<impl Fn(&[f64]) -> f64 + Sync> {
        FnModel { n_features: d, f }
    }

    /// Average marginal contribution over all d! orderings, evaluating the
    /// value function directly each time.
    fn permutation_oracle(f: &dyn Fn(&[f64]) -> f64, x: &[f64], bg: &Array2<f64>) -> Vec<f64> {
        let d = x.len();
        let value = |members: &[bool]| {
            let total: f64 = bg
                .rows()
                .into_iter()
                .map(|r| {
                    let z: Vec<f64> = (0..d).map(|j| if members[j] { x[j] } else { r[j] }).collect();
                    f(&z)
                })
                .sum();
            total / bg.nrows() as f64
        };
        let mut perms = vec![];
        permutations(&mut (0..d).collect(), 0, &mut perms);
        let mut phi = vec![0.0; d];
        for p in &perms {
            let mut members = vec![false; d];
            let mut prev = value(&members);
            for &i in p {
                members[i] = true;
                let cur = value(&members);
                phi[i] += cur - prev;
                prev = cur;
            }
        }
        phi.iter().map(|v| v / perms.len() as f64).collect()
    }

    fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == items.len() {
            out.push(items.clone());
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permutations(items, k + 1, out);
            items.swap(k, i);
        }
    }

    fn nonlinear(w: &[f64]) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
        move |x: &[f64]| {
            let lin: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
            let inter = x.windows(2).map(|p| p[0] * p[1]).sum::<f64>();
            crate::models::sigmoid(lin + 0.5 * inter - 0.3 * x[0].max(0.0))
        }
    }

    #[test]
    fn constant_model() {
        let m = fn_model(3, |_| 0.42);
        let e = exact_shap(&m, &[1.0, 2.0, 3.0], array![[0.0, 0.0, 0.0], [5.0, 1.0, 2.0]].view()).unwrap();
        assert_eq!(e.phi, vec![0.0; 3]);
        assert_eq!((e.phi0, e.fx), (0.42, 0.42));
    }

    #[test]
    fn product_of_two_features() {
        let m = fn_model(2, |x| x[0] * x[1]);
        let e = exact_shap(&m, &[1.0, 1.0], array![[0.0, 0.0]].view()).unwrap();
        assert_eq!(e.phi0, 0.0);
        assert!((e.phi[0] - 0.5).abs() < 1e-12 && (e.phi[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linear_model_closed_form() {
        let w = [0.7, -1.3, 2.0, 0.1, -0.4];
        let m = fn_model(5, move |x| x.iter().zip(&w).map(|(a, b)| a * b).sum());
        let bg = Array2::from_shape_fn((7, 5), |(i, j)| ((i * 5 + j) as f64 * 0.37).sin());
        let x = [0.3, 1.2, -0.8, 2.2, 0.0];
        let e = exact_shap(&m, &x, bg.view()).unwrap();
        let means = bg.mean_axis(Axis(0)).unwrap();
        for j in 0..5 {
            assert!((e.phi[j] - w[j] * (x[j] - means[j])).abs() < 1e-9);
        }
    }

    #[test]
    fn dummy_and_symmetric_features() {
        // feature 2 ignored; features 0 and 1 play identical roles
        let m = fn_model(3, |x| (x[0] + x[1]).tanh() + x[0] * x[1]);
        let bg = array![[0.2, 0.2, 9.0], [-1.0, -1.0, 4.0]];
        let e = exact_shap(&m, &[0.7, 0.7, -3.0], bg.view()).unwrap();
        assert!(e.phi[2].abs() < 1e-9);
        assert!((e.phi[0] - e.phi[1]).abs() < 1e-9);
    }

    #[test]
    fn too_many_features() {
        let m = fn_model(21, |_| 0.0);
        let bg = Array2::zeros((1, 21));
        assert!(matches!(
            exact_shap(&m, &[0.0; 21], bg.view()),
            Err(ExplainError::TooManyFeatures(21))
        ));
    }

    #[test]
    fn non_finite_output_is_reported() {
        let m = fn_model(2, |x| if x[0] > 0.5 { f64::NAN } else { 0.0 });
        assert!(matches!(
            exact_shap(&m, &[1.0, 0.0], array![[0.0, 0.0]].view()),
            Err(ExplainError::NonFiniteModelOutput { coalition: 1 })
        ));
    }

    #[test]
    fn background_is_seeded_subset() {
        let x = Array2::from_shape_fn((300, 2), |(i, j)| (i * 2 + j) as f64);
        let a = background(x.view(), 100, 5);
        assert_eq!(a, background(x.view(), 100, 5));
        assert_eq!(a.nrows(), 100);
        assert_eq!(background(x.view(), 1000, 5), x);
    }

    #[test]
    fn ranking_by_mean_abs() {
        let e = |phi: Vec<f64>| ShapExplanation { phi0: 0.0, fx: phi.iter().sum(), phi, instance: vec![0.0; 3] };
        let s = ShapSummary::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![e(vec![0.1, -0.5, 0.1]), e(vec![-0.1, 0.3, 0.0])],
        )
        .unwrap();
        assert_eq!(s.ranking, vec!["b", "a", "c"]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_permutation_oracle(
            d in 1usize..=4,
            seed in any::<u64>(),
        ) {
            use rand::Rng;
            let mut rng = crate::seed::rng(seed);
            let w: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let bg = Array2::from_shape_fn((3, d), |_| rng.random_range(-1.0..1.0));
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = nonlinear(&w);
            let e = exact_shap(&fn_model(d, &f), &x, bg.view()).unwrap();
            let oracle = permutation_oracle(&f, &x, &bg);
            for j in 0..d {
                prop_assert!((e.phi[j] - oracle[j]).abs() < 1e-9);
            }
            prop_assert!(e.efficiency_gap() < 1e-9);
        }
    }

    #[test]
    fn single_draw_posterior_equals_its_network() {
        use crate::bayes::{PriorSpec, PosteriorSampleSet};
        let d = 3;
        let w: Vec<f64> = (0..net::n_weights(d)).map(|k| ((k * 7) as f64 * 0.13).sin()).collect();
        let samples = PosteriorSampleSet {
            prior: PriorSpec::shipped()[0],
            feature_names: vec!["a".into(), "b".into(), "c".into()],
            samples: Array2::from_shape_vec((1, w.len()), w.clone()).unwrap(),
            chains: 1,
            draws_per_chain: 1,
            diagnostics: vec![],
        };
        let bg = array![[0.0, 1.0, -1.0], [0.5, 0.5, 0.5]];
        let x = [1.0, -0.3, 0.2];
        let from_posterior = exact_shap(&PosteriorMeanModel::new(&samples), &x, bg.view()).unwrap();
        let wref = &w;
        let direct = exact_shap(&fn_model(d, move |r| net::forward(wref, r).unwrap()), &x, bg.view()).unwrap();
        assert_eq!(from_posterior, direct);
    }
}
