//! Classical classifier baselines, confusion-matrix metrics and grid-search
//! cross-validation.

mod boosting;
mod cv;
pub(crate) mod forest;
mod knn;
mod logistic;
mod metrics;
mod mlp;
mod naive_bayes;
mod svm;
pub mod tree;

use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{EncodedMatrix, LabelVector};
use crate::resample::ResampleError;

pub use boosting::GradientBoosting;
pub use cv::{grid_search_cv, refit, stratified_kfold, CvCell, CvOptions, CvOutcome};
pub use forest::{ForestParams, RandomForest};
pub use knn::Knn;
pub use logistic::Logistic;
pub use metrics::{confusion, metrics, ConfusionMatrix, MetricsReport};
pub use mlp::Mlp;
pub use naive_bayes::NaiveBayes;
pub use svm::Svm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClassifierFamily {
    Logistic,
    Knn,
    NaiveBayes,
    DecisionTree,
    RandomForest,
    GradientBoosting,
    Svm,
    Mlp,
}

impl ClassifierFamily {
    pub const ALL: [ClassifierFamily; 8] = [
        Self::Logistic,
        Self::Knn,
        Self::NaiveBayes,
        Self::DecisionTree,
        Self::RandomForest,
        Self::GradientBoosting,
        Self::Svm,
        Self::Mlp,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Self::Logistic => "LOGISTIC",
            Self::Knn => "KNN",
            Self::NaiveBayes => "NAIVE_BAYES",
            Self::DecisionTree => "DECISION_TREE",
            Self::RandomForest => "RANDOM_FOREST",
            Self::GradientBoosting => "GRADIENT_BOOSTING",
            Self::Svm => "SVM",
            Self::Mlp => "MLP",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.tag().eq_ignore_ascii_case(tag))
    }

    /// Built-in search grid.
    pub fn default_grid(self) -> Vec<HyperParams> {
        match self {
            Self::Logistic => [0.0, 0.01, 0.1, 1.0]
                .into_iter()
                .map(|l2_lambda| HyperParams::Logistic { l2_lambda })
                .collect(),
            Self::Knn => [3, 5, 7, 9].into_iter().map(|k| HyperParams::Knn { k }).collect(),
            Self::NaiveBayes => vec![HyperParams::NaiveBayes { var_smoothing: 1e-9 }],
            Self::DecisionTree => [Some(3), Some(5), Some(10), None]
                .into_iter()
                .map(|max_depth| HyperParams::DecisionTree { max_depth, min_split: 2 })
                .collect(),
            Self::RandomForest => [100, 300]
                .into_iter()
                .map(|n_trees| HyperParams::RandomForest {
                    n_trees,
                    max_depth: None,
                    feature_subset: FeatureSubset::Sqrt,
                    bootstrap: true,
                })
                .collect(),
            Self::GradientBoosting => {
                let mut grid = Vec::new();
                for n_trees in [100, 200] {
                    for learning_rate in [0.05, 0.1] {
                        for depth in [2, 3] {
                            grid.push(HyperParams::GradientBoosting {
                                n_trees,
                                learning_rate,
                                depth,
                            });
                        }
                    }
                }
                grid
            }
            Self::Svm => {
                let mut grid = Vec::new();
                for c in [0.1, 1.0, 10.0] {
                    for kernel in [Kernel::Linear, Kernel::Rbf] {
                        grid.push(HyperParams::Svm { c, kernel, gamma: None });
                    }
                }
                grid
            }
            Self::Mlp => {
                let mut grid = Vec::new();
                for hidden_units in [8, 16] {
                    for learning_rate in [1e-2, 1e-3] {
                        grid.push(HyperParams::Mlp {
                            hidden_units,
                            learning_rate,
                            epochs: 1000,
                        });
                    }
                }
                grid
            }
        }
    }
}

impl std::fmt::Display for ClassifierFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf,
}

/// Features considered at each forest node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubset {
    /// floor(sqrt(d)), at least one.
    Sqrt,
    All,
    Fixed(usize),
}

impl FeatureSubset {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            Self::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
            Self::All => d,
            Self::Fixed(m) => m.clamp(1, d.max(1)),
        }
    }
}

fn default_true() -> bool {
    true
}

/// Family-tagged hyperparameters. In JSON the tag is the `family` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum HyperParams {
    Logistic {
        l2_lambda: f64,
    },
    Knn {
        k: usize,
    },
    NaiveBayes {
        var_smoothing: f64,
    },
    DecisionTree {
        max_depth: Option<usize>,
        min_split: usize,
    },
    RandomForest {
        n_trees: usize,
        max_depth: Option<usize>,
        feature_subset: FeatureSubset,
        #[serde(default = "default_true")]
        bootstrap: bool,
    },
    GradientBoosting {
        n_trees: usize,
        learning_rate: f64,
        depth: usize,
    },
    Svm {
        c: f64,
        kernel: Kernel,
        /// RBF width; `None` picks 1 / (d * var(X)).
        gamma: Option<f64>,
    },
    Mlp {
        hidden_units: usize,
        learning_rate: f64,
        epochs: usize,
    },
}

impl HyperParams {
    pub fn family(&self) -> ClassifierFamily {
        match self {
            Self::Logistic { .. } => ClassifierFamily::Logistic,
            Self::Knn { .. } => ClassifierFamily::Knn,
            Self::NaiveBayes { .. } => ClassifierFamily::NaiveBayes,
            Self::DecisionTree { .. } => ClassifierFamily::DecisionTree,
            Self::RandomForest { .. } => ClassifierFamily::RandomForest,
            Self::GradientBoosting { .. } => ClassifierFamily::GradientBoosting,
            Self::Svm { .. } => ClassifierFamily::Svm,
            Self::Mlp { .. } => ClassifierFamily::Mlp,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidHyperParams(msg));
        let depth_ok = |d: &Option<usize>| d.is_none_or(|d| d >= 1);
        match self {
            Self::Logistic { l2_lambda } if !(l2_lambda.is_finite() && *l2_lambda >= 0.0) => {
                bad(format!("l2_lambda must be finite and >= 0, got {l2_lambda}"))
            }
            Self::Knn { k: 0 } => bad("k must be >= 1".into()),
            Self::NaiveBayes { var_smoothing } if !(var_smoothing.is_finite() && *var_smoothing >= 0.0) => {
                bad(format!("var_smoothing must be finite and >= 0, got {var_smoothing}"))
            }
            Self::DecisionTree { max_depth, min_split } if !depth_ok(max_depth) || *min_split < 2 => {
                bad("max_depth must be >= 1 and min_split >= 2".into())
            }
            Self::RandomForest {
                n_trees,
                max_depth,
                feature_subset,
                ..
            } if *n_trees == 0 || !depth_ok(max_depth) || *feature_subset == FeatureSubset::Fixed(0) => {
                bad("forest needs n_trees >= 1, max_depth >= 1 and a non-empty feature subset".into())
            }
            Self::GradientBoosting {
                learning_rate, depth, ..
            } if !(learning_rate.is_finite() && *learning_rate > 0.0 && *learning_rate <= 1.0) || *depth == 0 => {
                bad(format!("boosting needs 0 < learning_rate <= 1 and depth >= 1, got {learning_rate}, {depth}"))
            }
            Self::Svm { c, gamma, .. }
                if !(c.is_finite() && *c > 0.0) || gamma.is_some_and(|g| !(g.is_finite() && g > 0.0)) =>
            {
                bad(format!("svm needs C > 0 and gamma > 0, got C={c}, gamma={gamma:?}"))
            }
            Self::Mlp {
                hidden_units,
                learning_rate,
                epochs,
            } if *hidden_units == 0 || *epochs == 0 || !(learning_rate.is_finite() && *learning_rate > 0.0) => {
                bad("mlp needs hidden_units >= 1, epochs >= 1 and learning_rate > 0".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("singular fit: {0}")]
    SingularFit(String),
    #[error("{family} did not converge within {iterations} iterations")]
    NonConvergence {
        family: ClassifierFamily,
        iterations: usize,
        partial: Box<TrainedClassifier>,
    },
    #[error("feature mismatch: model expects {expected:?}, got {found:?}")]
    FeatureMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("{folds} folds requested but the minority class has {minority} rows")]
    FoldsExceedClass { folds: usize, minority: usize },
    #[error("resampling failed: {0}")]
    Resample(#[from] ResampleError),
}

#[derive(Debug, Clone)]
pub(crate) enum FittedState {
    Logistic(Logistic),
    Knn(Knn),
    NaiveBayes(NaiveBayes),
    Tree(tree::Tree),
    Forest(RandomForest),
    Boosting(GradientBoosting),
    Svm(Svm),
    Mlp(Mlp),
}

/// A fitted baseline. Immutable after fit.
#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub family: ClassifierFamily,
    pub hyper_params: HyperParams,
    pub feature_names: Vec<String>,
    state: FittedState,
}

impl TrainedClassifier {
    /// Class-1 probability for one encoded row.
    pub fn proba_row(&self, x: &[f64]) -> f64 {
        let p = match &self.state {
            FittedState::Logistic(m) => m.proba(x),
            FittedState::Knn(m) => m.proba(x),
            FittedState::NaiveBayes(m) => m.proba(x),
            FittedState::Tree(t) => t.predict(x),
            FittedState::Forest(m) => m.proba(x),
            FittedState::Boosting(m) => m.proba(x),
            FittedState::Svm(m) => m.proba(x),
            FittedState::Mlp(m) => m.proba(x),
        };
        p.clamp(0.0, 1.0)
    }

    /// Number of fitted numbers the model carries.
    pub fn parameter_count(&self) -> usize {
        let d = self.feature_names.len();
        match &self.state {
            FittedState::Logistic(_) => d + 1,
            FittedState::Knn(m) => m.n_train() * (d + 1),
            FittedState::NaiveBayes(_) => 4 * d + 2,
            FittedState::Tree(t) => t.n_nodes(),
            FittedState::Forest(m) => m.trees.iter().map(|t| t.n_nodes()).sum(),
            FittedState::Boosting(m) => 1 + m.trees.iter().map(|t| t.n_nodes()).sum::<usize>(),
            FittedState::Svm(m) => m.n_support() * (d + 1) + 1,
            FittedState::Mlp(m) => m.parameter_count(),
        }
    }

    pub fn as_logistic(&self) -> Option<&Logistic> {
        match &self.state {
            FittedState::Logistic(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_forest(&self) -> Option<&RandomForest> {
        match &self.state {
            FittedState::Forest(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_tree(&self) -> Option<&tree::Tree> {
        match &self.state {
            FittedState::Tree(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_boosting(&self) -> Option<&GradientBoosting> {
        match &self.state {
            FittedState::Boosting(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_svm(&self) -> Option<&Svm> {
        match &self.state {
            FittedState::Svm(m) => Some(m),
            _ => None,
        }
    }
}

fn check_training(x: &EncodedMatrix, y: &LabelVector) -> Result<(), ModelError> {
    if x.n_rows() != y.len() {
        return Err(ModelError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    if x.n_rows() < 2 {
        return Err(ModelError::TooFewRows(x.n_rows()));
    }
    let [neg, pos] = y.class_counts();
    if neg == 0 || pos == 0 {
        return Err(ModelError::SingleClass);
    }
    Ok(())
}

/// Fits one classifier. The family is taken from the hyperparameter tag.
pub fn fit(hp: &HyperParams, x: &EncodedMatrix, y: &LabelVector, seed: u64) -> Result<TrainedClassifier, ModelError> {
    hp.validate()?;
    let single_class_ok = matches!(hp, HyperParams::NaiveBayes { .. });
    match check_training(x, y) {
        Err(ModelError::SingleClass) if single_class_ok => {}
        other => other?,
    }
    let xv = x.values.view();
    let labels = y.as_slice();
    let wrap = |state| TrainedClassifier {
        family: hp.family(),
        hyper_params: hp.clone(),
        feature_names: x.feature_names.clone(),
        state,
    };
    let state = match *hp {
        HyperParams::Logistic { l2_lambda } => {
            let (model, converged, iterations) = Logistic::fit(xv, labels, l2_lambda);
            if !converged {
                return Err(ModelError::NonConvergence {
                    family: ClassifierFamily::Logistic,
                    iterations,
                    partial: Box::new(wrap(FittedState::Logistic(model))),
                });
            }
            FittedState::Logistic(model)
        }
        HyperParams::Knn { k } => FittedState::Knn(Knn::fit(xv, labels, k)),
        HyperParams::NaiveBayes { var_smoothing } => FittedState::NaiveBayes(NaiveBayes::fit(xv, labels, var_smoothing)),
        HyperParams::DecisionTree { max_depth, min_split } => {
            let params = tree::TreeParams {
                max_depth,
                min_split,
                max_features: None,
            };
            let target: Vec<f64> = labels.iter().map(|&v| v as f64).collect();
            let mut rng = crate::seed::rng(seed);
            FittedState::Tree(tree::grow(
                xv,
                &target,
                (0..labels.len()).collect(),
                tree::Criterion::Gini,
                params,
                &mut rng,
            ))
        }
        HyperParams::RandomForest {
            n_trees,
            max_depth,
            feature_subset,
            bootstrap,
        } => FittedState::Forest(RandomForest::fit(
            xv,
            labels,
            &forest::ForestParams {
                n_trees,
                max_depth,
                max_features: feature_subset.resolve(x.n_cols()),
                bootstrap,
            },
            seed,
        )),
        HyperParams::GradientBoosting {
            n_trees,
            learning_rate,
            depth,
        } => FittedState::Boosting(GradientBoosting::fit(xv, labels, n_trees, learning_rate, depth, seed)),
        HyperParams::Svm { c, kernel, gamma } => {
            let gamma = gamma.unwrap_or_else(|| default_gamma(xv));
            let (model, converged, iterations) = Svm::fit(xv, labels, c, kernel, gamma);
            if !converged {
                return Err(ModelError::NonConvergence {
                    family: ClassifierFamily::Svm,
                    iterations,
                    partial: Box::new(wrap(FittedState::Svm(model))),
                });
            }
            FittedState::Svm(model)
        }
        HyperParams::Mlp {
            hidden_units,
            learning_rate,
            epochs,
        } => FittedState::Mlp(Mlp::fit(xv, labels, hidden_units, learning_rate, epochs, seed)),
    };
    Ok(wrap(state))
}

/// 1 / (d * var(X)) over all entries, population variance; 1 when X is flat.
pub fn default_gamma(x: ArrayView2<'_, f64>) -> f64 {
    let n = x.len() as f64;
    let mean = x.sum() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

/// Class-1 probabilities for every row of `x`.
pub fn predict_proba(model: &TrainedClassifier, x: &EncodedMatrix) -> Result<Vec<f64>, ModelError> {
    if model.feature_names != x.feature_names {
        return Err(ModelError::FeatureMismatch {
            expected: model.feature_names.clone(),
            found: x.feature_names.clone(),
        });
    }
    Ok(x.values
        .axis_iter(Axis(0))
        .map(|row| match row.as_slice() {
            Some(s) => model.proba_row(s),
            None => model.proba_row(&row.to_vec()),
        })
        .collect())
}

/// Hard labels under the rule `proba > 0.5`.
pub fn predict_labels(model: &TrainedClassifier, x: &EncodedMatrix) -> Result<Vec<u8>, ModelError> {
    Ok(predict_proba(model, x)?.into_iter().map(label_of).collect())
}

pub fn label_of(p: f64) -> u8 {
    u8::from(p > 0.5)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
