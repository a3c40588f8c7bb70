//! Experiment driver: configuration, stage orchestration and reports.
//!
//! Stages run in a fixed order (stats, baselines on all features, feature
//! selection, baselines on the selected features, Bayesian networks, Shapley
//! explanations). Each subcommand runs one stage and reloads what it needs
//! from earlier stages' JSON outputs; `pipeline` runs them all in memory.

pub mod config;
pub mod error;
pub mod report;
pub mod stages;

use std::time::{SystemTime, UNIX_EPOCH};

pub use config::{Overrides, RunConfig};
pub use error::CliError;
pub use report::RunReport;

use report::*;
use stages::*;

/// The BNN configuration the reference study reports as best.
pub const EXPECTED_BEST_KEY: &str = "normal_0_10";

fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: (!cfg.canonical).then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        }),
    }
}

pub fn cmd_stats(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let ws = Workspace::create(&cfg.output_dir)?;
    run_stats(&load_table(cfg)?, &ws)?;
    Ok(())
}

/// Baselines on all features, plus the selected features when a selection
/// is already on disk.
pub fn cmd_baseline(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let ws = Workspace::create(&cfg.output_dir)?;
    let prep = prepare(cfg)?;
    let (full, mut rows) = run_baselines(cfg, &prep, FeatureSet::Full, prep.feature_names())?;
    let reduced = if ws.exists(SELECT_FILE) {
        let select: SelectReport = ws.read_json(SELECT_FILE, "baseline")?;
        let (r, more) = run_baselines(cfg, &prep, FeatureSet::Reduced, &select.confirmed)?;
        rows.extend(more);
        Some(r)
    } else {
        None
    };
    let stage = BaselineStage { full, reduced };
    ws.write_json(BASELINE_FILE, &stage)?;
    write_cv_table(&ws, &rows)?;
    write_baseline_plots(&ws, &stage, &target_levels(&prep.table))
}

pub fn cmd_select(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let ws = Workspace::create(&cfg.output_dir)?;
    let prep = prepare(cfg)?;
    write_select(&ws, &run_select(cfg, &prep)?)
}

pub fn cmd_bnn(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let ws = Workspace::create(&cfg.output_dir)?;
    let select: SelectReport = ws.read_json(SELECT_FILE, "bnn")?;
    let prep = prepare(cfg)?;
    let stage = run_bnn(cfg, &prep, &select.confirmed, &ws, &target_levels(&prep.table))?;
    match bnn_failures(&stage).first() {
        Some(f) => Err(CliError::stage(f.stage.clone(), &f.message)),
        None => Ok(()),
    }
}

pub fn cmd_shap(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let ws = Workspace::create(&cfg.output_dir)?;
    let select: SelectReport = ws.read_json(SELECT_FILE, "shap")?;
    let baseline: BaselineStage = ws.read_json(BASELINE_FILE, "shap")?;
    let bnn: BnnStage = ws.read_json(BNN_FILE, "shap")?;
    let reduced = baseline.reduced.as_ref().ok_or_else(|| CliError::StageDependencyMissing {
        stage: "shap",
        missing: "reduced-feature baselines (run `select` before `baseline`)".into(),
    })?;
    let prep = prepare(cfg)?;
    let reports = [&baseline.full, reduced];
    let ranking = rank_models(&reports, &bnn);
    run_shap(cfg, &prep, &ranking, &reports, &select.confirmed, &ws)?;
    Ok(())
}

/// Runs every stage and writes `report.json`. Per-model and per-prior
/// failures are collected in the report rather than aborting the run.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let ws = Workspace::create(&cfg.output_dir)?;
    let prep = prepare(cfg)?;
    let levels = target_levels(&prep.table);
    let stats = run_stats(&prep.table, &ws)?;

    let (full, mut rows) = run_baselines(cfg, &prep, FeatureSet::Full, prep.feature_names())?;
    let select = run_select(cfg, &prep)?;
    write_select(&ws, &select)?;
    let (reduced, more) = run_baselines(cfg, &prep, FeatureSet::Reduced, &select.confirmed)?;
    rows.extend(more);
    let baseline = BaselineStage {
        full,
        reduced: Some(reduced),
    };
    ws.write_json(BASELINE_FILE, &baseline)?;
    write_cv_table(&ws, &rows)?;
    write_baseline_plots(&ws, &baseline, &levels)?;
    let BaselineStage { full, reduced } = baseline;
    let reduced = reduced.expect("set above");

    let bnn = run_bnn(cfg, &prep, &select.confirmed, &ws, &levels)?;
    let mut failures: Vec<StageFailure> = full.failures.iter().chain(&reduced.failures).cloned().collect();
    failures.extend(bnn_failures(&bnn));

    let reports = [&full, &reduced];
    let ranking = rank_models(&reports, &bnn);
    let best = ranking
        .first()
        .cloned()
        .ok_or_else(|| CliError::stage("pipeline", "no model was evaluated"))?;
    let mut deviations = Vec::new();
    let expected = ModelRef::Bnn {
        key: EXPECTED_BEST_KEY.into(),
        feature_set: FeatureSet::Reduced,
    };
    if best.model != expected {
        let position = ranking.iter().position(|c| c.model == expected);
        deviations.push(match position {
            Some(p) => format!(
                "best model is {} (test accuracy {:.4}); BNN Normal(0,10) on selected features ranks {} with {:.4}",
                best.name,
                best.test_accuracy,
                p + 1,
                ranking[p].test_accuracy
            ),
            None => format!(
                "best model is {} (test accuracy {:.4}); BNN Normal(0,10) on selected features was not evaluated",
                best.name, best.test_accuracy
            ),
        });
    }

    let shap = match run_shap(cfg, &prep, &ranking, &reports, &select.confirmed, &ws) {
        Ok(s) => {
            if let Some(orig) = &s.report.substituted_for {
                deviations.push(format!(
                    "explained {} instead of {orig}, which has more than {} inputs",
                    s.report.model.name, cfg.shap.max_features
                ));
            }
            Some(s.report)
        }
        Err(e) => {
            failures.push(StageFailure {
                stage: "shap".into(),
                message: e.to_string(),
            });
            None
        }
    };

    let report = RunReport {
        provenance: provenance(cfg),
        stats,
        split: prep.split_summary(cfg),
        baselines_full: full,
        boruta: select,
        baselines_reduced: reduced,
        bnn: bnn.entries,
        ranking,
        best_model: best,
        shap,
        deviations,
        failures,
    };
    ws.write_json(REPORT_FILE, &report)?;
    Ok(report)
}
