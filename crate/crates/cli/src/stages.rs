//! Stage implementations. Each stage computes in memory, then writes its
//! artifacts from the calling thread; the standalone subcommands reload
//! upstream stage outputs from the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use uqtab_core::bayes::{self, net, posterior_predict, uncertainty, PosteriorSampleSet, PriorSpec};
use uqtab_core::boruta::boruta_select;
use uqtab_core::data::{descriptive_stats, encode, load_csv, standardize, stratified_split, DatasetTable, SplitIndices, StatsReport};
use uqtab_core::explain::{self, background, explain_bnn, explain_rows, ShapSummary};
use uqtab_core::models::{confusion, grid_search_cv, label_of, metrics, predict_labels, refit, CvCell, CvOptions};
use uqtab_core::plot;
use uqtab_core::resample::smote;
use uqtab_core::{ClassifierFamily, EncodedMatrix, FeatureSchema, HyperParams, LabelVector, TrainedClassifier};

use crate::config::{BandKind, RunConfig};
use crate::error::CliError;
use crate::report::*;

pub const STATS_FILE: &str = "stats.json";
pub const BASELINE_FILE: &str = "baseline.json";
pub const SELECT_FILE: &str = "select.json";
pub const BNN_FILE: &str = "bnn.json";
pub const SHAP_FILE: &str = "shap.json";
pub const REPORT_FILE: &str = "report.json";
pub const CV_TABLE_FILE: &str = "cv_table.csv";

/// Output directory layout.
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        let ws = Self { root: root.to_path_buf() };
        for dir in [ws.root.clone(), ws.plots()] {
            fs::create_dir_all(&dir).map_err(|source| CliError::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
        Ok(ws)
    }

    pub fn plots(&self) -> PathBuf {
        self.root.join("plots")
    }

    pub fn write(&self, rel: &str, text: &str) -> Result<(), CliError> {
        let path = self.root.join(rel);
        fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn write_plot(&self, name: &str, svg: &str) -> Result<(), CliError> {
        self.write(&format!("plots/{name}"), svg)
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
        text.push('\n');
        self.write(rel, &text)
    }

    /// Reads an upstream stage output, naming the missing file on failure.
    pub fn read_json<T: DeserializeOwned>(&self, rel: &str, stage: &'static str) -> Result<T, CliError> {
        let path = self.root.join(rel);
        let text = fs::read_to_string(&path).map_err(|_| CliError::StageDependencyMissing {
            stage,
            missing: path.display().to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::stage(stage, format!("{}: {e}", path.display())))
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.root.join(rel).is_file()
    }
}

/// Encoded, split and scaled data shared by all stages.
pub struct Prepared {
    pub table: DatasetTable,
    pub split: SplitIndices,
    pub raw_train: EncodedMatrix,
    pub raw_test: EncodedMatrix,
    pub scaled_train: EncodedMatrix,
    pub scaled_test: EncodedMatrix,
    pub y_train: LabelVector,
    pub y_test: LabelVector,
    pub scaler_fit_on_all_rows: bool,
}

pub struct Inputs {
    pub train: EncodedMatrix,
    pub test: EncodedMatrix,
}

impl Prepared {
    pub fn feature_names(&self) -> &[String] {
        &self.raw_train.feature_names
    }

    /// Train/test matrices restricted to `features`, raw or scaled.
    pub fn inputs(&self, raw: bool, features: &[String]) -> Result<Inputs, CliError> {
        let (train, test) = if raw {
            (&self.raw_train, &self.raw_test)
        } else {
            (&self.scaled_train, &self.scaled_test)
        };
        let idx = train.column_indices(features).map_err(|e| CliError::stage("data", e))?;
        Ok(Inputs {
            train: train.select_columns(&idx),
            test: test.select_columns(&idx),
        })
    }

    pub fn split_summary(&self, cfg: &RunConfig) -> SplitSummary {
        SplitSummary {
            ratio: self.split.ratio,
            train_rows: self.y_train.len(),
            test_rows: self.y_test.len(),
            train_class_counts: self.y_train.class_counts(),
            test_class_counts: self.y_test.class_counts(),
            scaler_fit_on_all_rows: self.scaler_fit_on_all_rows,
            smote_before_cv: cfg.paper_faithful_smote,
        }
    }
}

pub fn load_table(cfg: &RunConfig) -> Result<DatasetTable, CliError> {
    let schema = FeatureSchema::from_path(&cfg.schema).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    load_csv(&cfg.dataset, &schema).map_err(|e| CliError::stage("data", e))
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let schema = FeatureSchema::from_path(&cfg.schema).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    let table = load_csv(&cfg.dataset, &schema).map_err(|e| CliError::stage("data", e))?;
    let (x, y) = encode(&table, &schema).map_err(|e| CliError::stage("data", e))?;
    let split = stratified_split(&y, cfg.split_ratio, cfg.stage_seed("split")).map_err(|e| CliError::stage("data", e))?;
    let raw_train = x.select_rows(&split.train_idx);
    let raw_test = x.select_rows(&split.test_idx);
    let (scaled_train, scaled_test) = if cfg.paper_faithful_scaling {
        let (all, _) = standardize(&x, &[]);
        (all.select_rows(&split.train_idx), all.select_rows(&split.test_idx))
    } else {
        let (train, mut others) = standardize(&raw_train, &[&raw_test]);
        (train, others.remove(0))
    };
    Ok(Prepared {
        y_train: y.select(&split.train_idx),
        y_test: y.select(&split.test_idx),
        table,
        split,
        raw_train,
        raw_test,
        scaled_train,
        scaled_test,
        scaler_fit_on_all_rows: cfg.paper_faithful_scaling,
    })
}

// ---------------------------------------------------------------- stats

pub fn run_stats(table: &DatasetTable, ws: &Workspace) -> Result<StatsReport, CliError> {
    let stats = descriptive_stats(table).map_err(|e| CliError::stage("stats", e))?;
    ws.write_json(STATS_FILE, &stats)?;
    for summary in &stats.numeric {
        let Some(j) = table.column_index(&summary.column) else { continue };
        let values: Vec<f64> = table.rows.iter().filter_map(|r| r.features[j].as_number()).collect();
        let name = summary.column.to_lowercase().replace(' ', "_");
        let svg = plot::histogram(&values, 14, &format!("Distribution of {}", summary.column), &summary.column);
        ws.write_plot(&format!("histogram_{name}.svg"), &svg)?;
    }
    Ok(stats)
}

// ------------------------------------------------------------- baselines

/// Tree learners see unscaled encodings; every other family sees z-scores.
pub fn uses_raw_inputs(family: ClassifierFamily) -> bool {
    matches!(
        family,
        ClassifierFamily::DecisionTree | ClassifierFamily::RandomForest | ClassifierFamily::GradientBoosting
    )
}

struct CvSetup {
    x: EncodedMatrix,
    y: LabelVector,
    test: EncodedMatrix,
    opts: CvOptions,
}

fn cv_setup(cfg: &RunConfig, prep: &Prepared, family: ClassifierFamily, set: FeatureSet, features: &[String]) -> Result<CvSetup, CliError> {
    let raw = uses_raw_inputs(family);
    let inputs = prep.inputs(raw, features)?;
    let (x, y, smote_cfg) = if cfg.paper_faithful_smote {
        let space = if raw { "raw" } else { "scaled" };
        let seed = cfg.stage_seed(&format!("smote/before-cv/{space}/{set}"));
        let out = smote(&inputs.train, &prep.y_train, &cfg.smote.with_seed(seed)).map_err(|e| CliError::stage("baseline", e))?;
        (out.x, out.y, None)
    } else {
        (inputs.train, prep.y_train.clone(), Some(cfg.smote.with_seed(0)))
    };
    Ok(CvSetup {
        x,
        y,
        test: inputs.test,
        opts: CvOptions {
            folds: cfg.cv_folds.clone(),
            smote: smote_cfg,
            seed: cfg.stage_seed(&format!("cv/{}/{set}", family.tag())),
        },
    })
}

/// One row of `cv_table.csv`.
pub struct CvRow {
    pub feature_set: FeatureSet,
    pub family: ClassifierFamily,
    pub cell: CvCell,
    pub selected: bool,
}

pub fn run_baselines(
    cfg: &RunConfig,
    prep: &Prepared,
    set: FeatureSet,
    features: &[String],
) -> Result<(BaselineReport, Vec<CvRow>), CliError> {
    let mut models = Vec::new();
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (&family, grid) in &cfg.grids {
        let stage = format!("baseline/{set}/{}", family.tag());
        let setup = cv_setup(cfg, prep, family, set, features)?;
        let outcome = match grid_search_cv(grid, &setup.x, &setup.y, &setup.opts) {
            Ok(o) => o,
            Err(e) => {
                failures.push(StageFailure { stage, message: e.to_string() });
                continue;
            }
        };
        let scored = predict_labels(&outcome.model, &setup.test).and_then(|yhat| confusion(&yhat, &prep.y_test));
        let cm = match scored {
            Ok(cm) => cm,
            Err(e) => {
                failures.push(StageFailure { stage, message: e.to_string() });
                continue;
            }
        };
        let best = outcome.best();
        models.push(ModelEntry {
            family,
            feature_set: set,
            n_features: features.len(),
            hyper_params: best.hyper_params.clone(),
            cv_folds: best.folds,
            cv_accuracy: best.mean_accuracy,
            parameter_count: outcome.model.parameter_count(),
            metrics: metrics(&cm),
        });
        rows.extend(outcome.cells.iter().enumerate().map(|(i, cell)| CvRow {
            feature_set: set,
            family,
            cell: cell.clone(),
            selected: i == outcome.best_cell,
        }));
    }
    Ok((
        BaselineReport {
            feature_set: set,
            feature_names: features.to_vec(),
            models,
            failures,
        },
        rows,
    ))
}

/// Rebuilds the exact model a baseline run selected.
pub fn rebuild_baseline(
    cfg: &RunConfig,
    prep: &Prepared,
    family: ClassifierFamily,
    set: FeatureSet,
    features: &[String],
    hp: &HyperParams,
) -> Result<(TrainedClassifier, Inputs), CliError> {
    let setup = cv_setup(cfg, prep, family, set, features)?;
    let model = refit(hp, &setup.x, &setup.y, &setup.opts).map_err(|e| CliError::stage("shap", e))?;
    Ok((model, prep.inputs(uses_raw_inputs(family), features)?))
}

pub fn write_cv_table(ws: &Workspace, rows: &[CvRow]) -> Result<(), CliError> {
    let mut out = String::from("feature_set,family,hp_index,hyper_params,folds,mean_accuracy,fold_accuracies,selected,error\n");
    let quote = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
    for r in rows {
        let hp = serde_json::to_string(&r.cell.hyper_params).expect("hyperparameters serialize");
        let folds: Vec<String> = r.cell.fold_accuracies.iter().map(|a| format!("{a:?}")).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{:?},{},{},{}\n",
            r.feature_set,
            r.family.tag(),
            r.cell.hp_index,
            quote(&hp),
            r.cell.folds,
            r.cell.mean_accuracy,
            quote(&folds.join(";")),
            r.selected,
            quote(r.cell.error.as_deref().unwrap_or("")),
        ));
    }
    ws.write(CV_TABLE_FILE, &out)
}

pub fn write_baseline_plots(ws: &Workspace, stage: &BaselineStage, levels: &[String]) -> Result<(), CliError> {
    let reports = std::iter::once(&stage.full).chain(stage.reduced.as_ref());
    for report in reports {
        for m in &report.models {
            let title = format!("{} ({} features)", m.family.tag(), report.feature_set);
            let svg = plot::confusion_heatmap(&m.metrics.confusion, &title, &levels[0], &levels[1]);
            ws.write_plot(&format!("confusion_{}_{}.svg", report.feature_set, m.family.tag().to_lowercase()), &svg)?;
        }
    }
    if let Some(reduced) = &stage.reduced {
        let groups: Vec<String> = stage.full.models.iter().map(|m| m.family.tag().to_string()).collect();
        let lookup = |r: &BaselineReport| -> Vec<f64> {
            stage
                .full
                .models
                .iter()
                .map(|m| {
                    r.models
                        .iter()
                        .find(|x| x.family == m.family)
                        .map_or(0.0, |x| x.metrics.accuracy)
                })
                .collect()
        };
        let series = vec![
            ("All features".to_string(), lookup(&stage.full)),
            ("Selected features".to_string(), lookup(reduced)),
        ];
        let svg = plot::grouped_bars(&groups, &series, "Test accuracy before and after selection", "Accuracy");
        ws.write_plot("accuracy_before_after.svg", &svg)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- select

pub fn run_select(cfg: &RunConfig, prep: &Prepared) -> Result<SelectReport, CliError> {
    let decision = boruta_select(&prep.raw_train, &prep.y_train, &cfg.boruta.with_seed(cfg.stage_seed("boruta")))
        .map_err(|e| CliError::stage("select", e))?;
    let confirmed = decision.confirmed();
    if confirmed.is_empty() {
        return Err(CliError::stage("select", "no feature was confirmed"));
    }
    Ok(SelectReport { confirmed, decision })
}

pub fn write_select(ws: &Workspace, report: &SelectReport) -> Result<(), CliError> {
    ws.write_json(SELECT_FILE, report)?;
    ws.write_plot("boruta_importance.svg", &plot::boruta_boxes(&report.decision, "Feature importance across iterations"))
}

// ------------------------------------------------------------------- bnn

pub fn posterior_stem(prior: &PriorSpec, set: FeatureSet) -> String {
    format!("posterior_{}_{set}", prior.key())
}

struct BnnJob {
    prior: PriorSpec,
    set: FeatureSet,
}

struct BnnResult {
    samples: PosteriorSampleSet,
    run: BnnRun,
    interval: Vec<(f64, f64)>,
}

fn fit_one(cfg: &RunConfig, prep: &Prepared, job: &BnnJob, features: &[String]) -> Result<BnnResult, String> {
    let inputs = prep.inputs(false, features).map_err(|e| e.to_string())?;
    let balanced = smote(&inputs.train, &prep.y_train, &cfg.smote.with_seed(cfg.stage_seed(&format!("bnn/smote/{}", job.set))))
        .map_err(|e| e.to_string())?;
    let nuts = cfg.nuts.with_seed(cfg.stage_seed(&format!("bnn/{}/{}", job.prior.key(), job.set)));
    let samples = bayes::fit_bnn(&balanced.x, &balanced.y, job.prior, &nuts).map_err(|e| e.to_string())?;
    let draws = posterior_predict(&samples, &inputs.test).map_err(|e| e.to_string())?;
    let series = uncertainty(&draws).map_err(|e| e.to_string())?;
    let yhat: Vec<u8> = series.iter().map(|u| label_of(u.mean)).collect();
    let cm = confusion(&yhat, &prep.y_test).map_err(|e| e.to_string())?;
    let n = series.len() as f64;
    let run = BnnRun {
        n_features: features.len(),
        parameter_count: net::n_weights(features.len()),
        posterior_file: posterior_stem(&job.prior, job.set),
        draws: samples.n_draws(),
        divergences: samples.diagnostics.iter().map(|d| d.divergences).sum(),
        metrics: metrics(&cm),
        mean_epistemic: series.iter().map(|u| u.epistemic).sum::<f64>() / n,
        mean_aleatoric: series.iter().map(|u| u.aleatoric).sum::<f64>() / n,
        uncertainty: series,
        chains: samples.diagnostics.clone(),
    };
    let interval = plot::predictive_interval(&draws, 0.9);
    Ok(BnnResult { samples, run, interval })
}

pub fn run_bnn(cfg: &RunConfig, prep: &Prepared, selected: &[String], ws: &Workspace, levels: &[String]) -> Result<BnnStage, CliError> {
    let priors = cfg.prior_specs()?;
    let jobs: Vec<BnnJob> = priors
        .iter()
        .flat_map(|p| [FeatureSet::Full, FeatureSet::Reduced].map(|set| BnnJob { prior: *p, set }))
        .collect();
    let all = prep.feature_names().to_vec();
    let results: Vec<Result<BnnResult, String>> = jobs
        .par_iter()
        .map(|job| {
            let features = if job.set == FeatureSet::Full { &all[..] } else { selected };
            fit_one(cfg, prep, job, features)
        })
        .collect();
    let mut entries: Vec<BnnEntry> = Vec::new();
    for (job, result) in jobs.iter().zip(results) {
        let outcome = match result {
            Ok(r) => {
                r.samples
                    .save(&ws.root, &r.run.posterior_file)
                    .map_err(|e| CliError::stage("bnn", e))?;
                let label = format!("{} ({} features)", job.prior.label(), job.set);
                let name = format!("{}_{}", job.prior.key(), job.set);
                let svg = match cfg.uncertainty_band {
                    BandKind::StdDev => plot::uncertainty_bands(&r.run.uncertainty, &format!("Posterior predictive mean, {label}")),
                    BandKind::Interval90 => plot::interval_band(&r.run.uncertainty, &r.interval, 0.9, &format!("Posterior predictive mean, {label}")),
                };
                ws.write_plot(&format!("uncertainty_{name}.svg"), &svg)?;
                let heat = plot::confusion_heatmap(&r.run.metrics.confusion, &format!("BNN {label}"), &levels[0], &levels[1]);
                ws.write_plot(&format!("confusion_bnn_{name}.svg"), &heat)?;
                BnnOutcome::Fitted(Box::new(r.run))
            }
            Err(message) => BnnOutcome::Failed { message },
        };
        match entries.iter_mut().find(|e| e.key == job.prior.key()) {
            Some(e) => e.reduced = outcome,
            None => entries.push(BnnEntry {
                prior: job.prior.label(),
                key: job.prior.key(),
                full: outcome,
                reduced: BnnOutcome::Failed {
                    message: "not run".into(),
                },
            }),
        }
    }
    let stage = BnnStage { entries };
    ws.write_json(BNN_FILE, &stage)?;
    Ok(stage)
}

pub fn bnn_failures(stage: &BnnStage) -> Vec<StageFailure> {
    stage
        .entries
        .iter()
        .flat_map(|e| {
            [FeatureSet::Full, FeatureSet::Reduced].into_iter().filter_map(move |set| match e.outcome(set) {
                BnnOutcome::Failed { message } => Some(StageFailure {
                    stage: format!("bnn/{}/{set}", e.key),
                    message: message.clone(),
                }),
                BnnOutcome::Fitted(_) => None,
            })
        })
        .collect()
}

// --------------------------------------------------------------- ranking

/// Every evaluated model ordered by test accuracy (descending), then by
/// parameter count (ascending); remaining ties keep listing order.
pub fn rank_models(baselines: &[&BaselineReport], bnn: &BnnStage) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    for report in baselines {
        for m in &report.models {
            out.push(Candidate {
                name: format!("{} ({} features)", m.family.tag(), m.feature_set),
                model: ModelRef::Baseline {
                    family: m.family,
                    feature_set: m.feature_set,
                },
                n_features: m.n_features,
                test_accuracy: m.metrics.accuracy,
                parameter_count: m.parameter_count,
            });
        }
    }
    for e in &bnn.entries {
        for set in [FeatureSet::Full, FeatureSet::Reduced] {
            if let Some(r) = e.outcome(set).fitted() {
                out.push(Candidate {
                    name: format!("BNN {} ({set} features)", e.prior),
                    model: ModelRef::Bnn {
                        key: e.key.clone(),
                        feature_set: set,
                    },
                    n_features: r.n_features,
                    test_accuracy: r.metrics.accuracy,
                    parameter_count: r.parameter_count,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.test_accuracy
            .total_cmp(&a.test_accuracy)
            .then(a.parameter_count.cmp(&b.parameter_count))
    });
    out
}

// ------------------------------------------------------------------ shap

pub fn run_shap(
    cfg: &RunConfig,
    prep: &Prepared,
    ranking: &[Candidate],
    baselines: &[&BaselineReport],
    selected: &[String],
    ws: &Workspace,
) -> Result<ShapStage, CliError> {
    let best = ranking.first().ok_or_else(|| CliError::stage("shap", "no model to explain"))?;
    let pick = ranking
        .iter()
        .find(|c| c.n_features <= cfg.shap.max_features)
        .ok_or_else(|| CliError::stage("shap", format!("every model has more than {} inputs", cfg.shap.max_features)))?;
    let features_of = |set: FeatureSet| -> Vec<String> {
        match set {
            FeatureSet::Full => prep.feature_names().to_vec(),
            FeatureSet::Reduced => selected.to_vec(),
        }
    };
    let bg_seed = cfg.stage_seed("shap/background");
    let (explanations, feature_names, bg_rows, posterior_draws) = match &pick.model {
        ModelRef::Baseline { family, feature_set } => {
            let entry = baselines
                .iter()
                .flat_map(|r| r.models.iter())
                .find(|m| m.family == *family && m.feature_set == *feature_set)
                .ok_or_else(|| CliError::stage("shap", format!("no baseline entry for {}", pick.name)))?;
            let features = features_of(*feature_set);
            let (model, inputs) = rebuild_baseline(cfg, prep, *family, *feature_set, &features, &entry.hyper_params)?;
            let bg = background(inputs.train.values.view(), cfg.shap.background_size, bg_seed);
            let ex = explain_rows(&model, inputs.test.values.view(), bg.view()).map_err(|e| CliError::stage("shap", e))?;
            (ex, features, bg.nrows(), None)
        }
        ModelRef::Bnn { key, feature_set } => {
            let prior = PriorSpec::parse(key).ok_or_else(|| CliError::stage("shap", format!("unknown prior {key}")))?;
            let samples = PosteriorSampleSet::load(&ws.root, &posterior_stem(&prior, *feature_set))
                .map_err(|e| CliError::stage("shap", e))?;
            let features = features_of(*feature_set);
            let inputs = prep.inputs(false, &features)?;
            let bg = background(inputs.train.values.view(), cfg.shap.background_size, bg_seed);
            let ex = explain_bnn(&samples, &inputs.test, bg.view(), cfg.shap.max_draws).map_err(|e| CliError::stage("shap", e))?;
            let used = samples.thinned(cfg.shap.max_draws).n_draws();
            (ex, features, bg.nrows(), Some(used))
        }
    };
    let summary = ShapSummary::new(feature_names, explanations).map_err(|e| CliError::stage("shap", e))?;
    explain::render_shap(&summary, &ws.plots(), cfg.stage_seed("shap/render"), cfg.shap.instance)
        .map_err(|e| CliError::stage("shap", e))?;
    let n = summary.explanations.len();
    let report = ShapReport {
        model: pick.clone(),
        substituted_for: (pick != best).then(|| best.name.clone()),
        feature_names: summary.feature_names.clone(),
        ranking: summary.ranking.clone(),
        mean_abs: summary.mean_abs.clone(),
        mean_phi0: summary.explanations.iter().map(|e| e.phi0).sum::<f64>() / n as f64,
        n_explained: n,
        background_rows: bg_rows,
        posterior_draws,
    };
    let stage = ShapStage { report, summary };
    ws.write_json(SHAP_FILE, &stage)?;
    Ok(stage)
}

pub fn target_levels(table: &DatasetTable) -> Vec<String> {
    table.target_levels.clone()
}
