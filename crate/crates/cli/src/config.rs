//! Run configuration: one JSON document drives every stage.
//!
//! Relative paths are resolved against the directory of the config file.
//! Unknown keys are rejected; omitted keys take the defaults below.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uqtab_core::bayes::{NutsConfig, PriorSpec};
use uqtab_core::boruta::{BorutaConfig, ImportanceKind};
use uqtab_core::resample::SmoteConfig;
use uqtab_core::seed;
use uqtab_core::{ClassifierFamily, HyperParams};

use crate::error::CliError;

/// The published schema for [`RunConfig`] documents.
pub const SCHEMA: &str = include_str!("../../../config/run_config.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSettings {
    pub k_neighbors: usize,
    pub target_ratio: f64,
}

impl Default for SmoteSettings {
    fn default() -> Self {
        let d = SmoteConfig::default();
        Self {
            k_neighbors: d.k_neighbors,
            target_ratio: d.target_ratio,
        }
    }
}

impl SmoteSettings {
    pub fn with_seed(&self, seed: u64) -> SmoteConfig {
        SmoteConfig {
            k_neighbors: self.k_neighbors,
            target_ratio: self.target_ratio,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BorutaSettings {
    pub max_iterations: usize,
    pub alpha: f64,
    pub forest: HyperParams,
    pub importance: ImportanceKind,
}

impl Default for BorutaSettings {
    fn default() -> Self {
        let d = BorutaConfig::default();
        Self {
            max_iterations: d.max_iterations,
            alpha: d.alpha,
            forest: d.forest_hp,
            importance: d.importance,
        }
    }
}

impl BorutaSettings {
    pub fn with_seed(&self, seed: u64) -> BorutaConfig {
        BorutaConfig {
            max_iterations: self.max_iterations,
            alpha: self.alpha,
            forest_hp: self.forest.clone(),
            importance: self.importance,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NutsSettings {
    pub warmup: usize,
    pub draws: usize,
    pub max_tree_depth: usize,
    pub target_accept: f64,
    pub divergence_threshold: f64,
    pub chains: usize,
    pub init_sd: f64,
}

impl Default for NutsSettings {
    fn default() -> Self {
        let d = NutsConfig::default();
        Self {
            warmup: d.warmup,
            draws: d.draws,
            max_tree_depth: d.max_tree_depth,
            target_accept: d.target_accept,
            divergence_threshold: d.divergence_threshold,
            chains: d.chains,
            init_sd: d.init_sd,
        }
    }
}

impl NutsSettings {
    pub fn with_seed(&self, seed: u64) -> NutsConfig {
        NutsConfig {
            warmup: self.warmup,
            draws: self.draws,
            max_tree_depth: self.max_tree_depth,
            target_accept: self.target_accept,
            divergence_threshold: self.divergence_threshold,
            seed,
            chains: self.chains,
            init_sd: self.init_sd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandKind {
    /// mean ± sqrt(epistemic) and mean ± sqrt(aleatoric)
    StdDev,
    /// central 90% interval of the per-draw probabilities
    Interval90,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapSettings {
    pub background_size: usize,
    /// Posterior draws kept (evenly thinned) when explaining a network.
    pub max_draws: usize,
    /// Test row drawn in the waterfall chart.
    pub instance: usize,
    /// Models with more inputs are not explained; the best model within the
    /// limit is used instead and the substitution is reported.
    pub max_features: usize,
}

impl Default for ShapSettings {
    fn default() -> Self {
        Self {
            background_size: 100,
            max_draws: 200,
            instance: 0,
            max_features: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub seed: u64,
    pub split_ratio: f64,
    pub smote: SmoteSettings,
    pub cv_folds: Vec<usize>,
    /// Families absent from the map are not run.
    pub grids: BTreeMap<ClassifierFamily, Vec<HyperParams>>,
    pub boruta: BorutaSettings,
    pub nuts: NutsSettings,
    pub priors: Vec<String>,
    pub uncertainty_band: BandKind,
    pub shap: ShapSettings,
    pub output_dir: PathBuf,
    pub paper_faithful_scaling: bool,
    pub paper_faithful_smote: bool,
    /// Leave the wall-clock timestamp out of reports.
    pub canonical: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data/thyroid_surrogate.csv"),
            schema: PathBuf::from("data/thyroid_schema.json"),
            seed: 42,
            split_ratio: 0.8,
            smote: SmoteSettings::default(),
            cv_folds: vec![2, 5, 10],
            grids: ClassifierFamily::ALL.iter().map(|f| (*f, f.default_grid())).collect(),
            boruta: BorutaSettings::default(),
            nuts: NutsSettings::default(),
            priors: PriorSpec::shipped().iter().map(|p| p.label()).collect(),
            uncertainty_band: BandKind::StdDev,
            shap: ShapSettings::default(),
            output_dir: PathBuf::from("out"),
            paper_faithful_scaling: false,
            paper_faithful_smote: false,
            canonical: false,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub priors: Option<Vec<String>>,
    pub paper_faithful_scaling: bool,
    pub paper_faithful_smote: bool,
    pub canonical: bool,
}

impl RunConfig {
    pub fn from_json_str(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json_str(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.dataset, &mut self.schema, &mut self.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(p) = &o.priors {
            self.priors = p.clone();
        }
        self.paper_faithful_scaling |= o.paper_faithful_scaling;
        self.paper_faithful_smote |= o.paper_faithful_smote;
        self.canonical |= o.canonical;
    }

    /// Range checks serde cannot express, plus existence of input files.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::ConfigInvalid(m));
        for (what, p) in [("dataset", &self.dataset), ("schema", &self.schema)] {
            if !p.is_file() {
                return bad(format!("{what} file {} does not exist", p.display()));
            }
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split_ratio {} must lie in (0, 1)", self.split_ratio));
        }
        if self.smote.k_neighbors == 0 || !(self.smote.target_ratio > 0.0 && self.smote.target_ratio <= 1.0) {
            return bad("smote needs k_neighbors > 0 and target_ratio in (0, 1]".into());
        }
        if self.cv_folds.is_empty() || self.cv_folds.iter().any(|&k| k < 2) {
            return bad("cv_folds must be non-empty with every entry >= 2".into());
        }
        for (family, grid) in &self.grids {
            if grid.is_empty() {
                return bad(format!("grid for {family} is empty"));
            }
            for hp in grid {
                if hp.family() != *family {
                    return bad(format!("grid for {family} contains a {} entry", hp.family()));
                }
                hp.validate().map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
            }
        }
        self.boruta
            .with_seed(0)
            .validate()
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        self.nuts
            .with_seed(0)
            .validate()
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        self.prior_specs()?;
        if self.shap.background_size == 0 {
            return bad("shap.background_size must be positive".into());
        }
        if self.shap.max_features > uqtab_core::explain::MAX_FEATURES {
            return bad(format!(
                "shap.max_features {} exceeds the enumeration limit {}",
                self.shap.max_features,
                uqtab_core::explain::MAX_FEATURES
            ));
        }
        Ok(())
    }

    pub fn prior_specs(&self) -> Result<Vec<PriorSpec>, CliError> {
        if self.priors.is_empty() {
            return Err(CliError::ConfigInvalid("prior list is empty".into()));
        }
        let mut out: Vec<PriorSpec> = Vec::new();
        for text in &self.priors {
            let p = PriorSpec::parse(text).ok_or_else(|| CliError::ConfigInvalid(format!("unknown prior `{text}`")))?;
            if !out.contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// SHA-256 of the canonical JSON serialization, with the output
    /// directory and the timestamp switch left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.canonical = false;
        for p in [&mut c.dataset, &mut c.schema] {
            *p = p.file_name().map(PathBuf::from).unwrap_or_default();
        }
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        format!("{:x}", Sha256::digest(bytes))
    }

    /// Seed for one pipeline consumer; consumers never share a stream.
    pub fn stage_seed(&self, label: &str) -> u64 {
        seed::derive(self.seed, label)
    }
}

/// Keys of a JSON object, sorted.
fn object_keys(v: &serde_json::Value) -> Vec<String> {
    let mut keys: Vec<String> = v.as_object().map(|m| m.keys().cloned().collect()).unwrap_or_default();
    keys.sort();
    keys
}

/// Top-level property names declared by [`SCHEMA`].
pub fn schema_properties() -> Vec<String> {
    let schema: serde_json::Value = serde_json::from_str(SCHEMA).expect("schema is valid JSON");
    object_keys(&schema["properties"])
}

/// Keys a serialized [`RunConfig`] carries.
pub fn config_keys() -> Vec<String> {
    object_keys(&serde_json::to_value(RunConfig::default()).expect("config serializes"))
}
