//! Serialized stage outputs and the consolidated run report.

use serde::{Deserialize, Serialize};
use uqtab_core::bayes::{ChainDiagnostics, Uncertainty};
use uqtab_core::boruta::FeatureDecision;
use uqtab_core::data::StatsReport;
use uqtab_core::explain::ShapSummary;
use uqtab_core::{ClassifierFamily, HyperParams, MetricsReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Full,
    Reduced,
}

impl FeatureSet {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Reduced => "reduced",
        }
    }
}

impl std::fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub toolkit_version: String,
    /// Absent in canonical mode.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp_unix: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub ratio: f64,
    pub train_rows: usize,
    pub test_rows: usize,
    /// `[negative, positive]`
    pub train_class_counts: [usize; 2],
    pub test_class_counts: [usize; 2],
    /// True when the scaler was fit on all rows before splitting.
    pub scaler_fit_on_all_rows: bool,
    /// True when SMOTE ran once on the training split instead of per fold.
    pub smote_before_cv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub family: ClassifierFamily,
    pub feature_set: FeatureSet,
    pub n_features: usize,
    pub hyper_params: HyperParams,
    pub cv_folds: usize,
    pub cv_accuracy: f64,
    pub parameter_count: usize,
    /// Test-split metrics.
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub feature_set: FeatureSet,
    pub feature_names: Vec<String>,
    pub models: Vec<ModelEntry>,
    pub failures: Vec<StageFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineStage {
    pub full: BaselineReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reduced: Option<BaselineReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectReport {
    pub confirmed: Vec<String>,
    pub decision: FeatureDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnnRun {
    pub n_features: usize,
    pub parameter_count: usize,
    /// Stem of the persisted sample files.
    pub posterior_file: String,
    pub draws: usize,
    pub divergences: usize,
    pub metrics: MetricsReport,
    pub mean_epistemic: f64,
    pub mean_aleatoric: f64,
    pub uncertainty: Vec<Uncertainty>,
    pub chains: Vec<ChainDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BnnOutcome {
    Fitted(Box<BnnRun>),
    Failed { message: String },
}

impl BnnOutcome {
    pub fn fitted(&self) -> Option<&BnnRun> {
        match self {
            Self::Fitted(r) => Some(r),
            Self::Failed { .. } => None,
        }
    }
}

/// Both feature sets for one prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnnEntry {
    pub prior: String,
    pub key: String,
    pub full: BnnOutcome,
    pub reduced: BnnOutcome,
}

impl BnnEntry {
    pub fn outcome(&self, set: FeatureSet) -> &BnnOutcome {
        match set {
            FeatureSet::Full => &self.full,
            FeatureSet::Reduced => &self.reduced,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnnStage {
    pub entries: Vec<BnnEntry>,
}

/// Where a candidate model came from, enough to rebuild it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelRef {
    Baseline { family: ClassifierFamily, feature_set: FeatureSet },
    Bnn { key: String, feature_set: FeatureSet },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    pub model: ModelRef,
    pub n_features: usize,
    pub test_accuracy: f64,
    pub parameter_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapReport {
    pub model: Candidate,
    /// Set when the best model had too many inputs to enumerate.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub substituted_for: Option<String>,
    pub feature_names: Vec<String>,
    pub ranking: Vec<String>,
    pub mean_abs: Vec<f64>,
    pub mean_phi0: f64,
    pub n_explained: usize,
    pub background_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub posterior_draws: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapStage {
    pub report: ShapReport,
    pub summary: ShapSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub provenance: Provenance,
    pub stats: StatsReport,
    pub split: SplitSummary,
    pub baselines_full: BaselineReport,
    pub boruta: SelectReport,
    pub baselines_reduced: BaselineReport,
    pub bnn: Vec<BnnEntry>,
    /// Every evaluated model, best first.
    pub ranking: Vec<Candidate>,
    pub best_model: Candidate,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shap: Option<ShapReport>,
    /// Departures from the expected outcome, stated plainly.
    pub deviations: Vec<String>,
    pub failures: Vec<StageFailure>,
}
