use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::{confusion, fit, metrics, predict_labels, ClassifierFamily, HyperParams, ModelError, TrainedClassifier};
use crate::data::{EncodedMatrix, LabelVector};
use crate::resample::{smote, SmoteConfig};
use crate::seed;

/// Test-row indices for each of `k` stratified folds. Rows of each class are
/// shuffled and dealt round-robin, so fold class counts differ by at most one.
pub fn stratified_kfold(y: &LabelVector, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, ModelError> {
    let [neg, pos] = y.class_counts();
    let minority = neg.min(pos);
    if k < 2 || k > minority {
        return Err(ModelError::FoldsExceedClass { folds: k, minority });
    }
    let mut rng = seed::rng(seed);
    let mut folds = vec![Vec::new(); k];
    let mut dealt = 0;
    for class in 0..2u8 {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y.as_slice()[i] == class).collect();
        rows.shuffle(&mut rng);
        for i in rows {
            folds[dealt % k].push(i);
            dealt += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone)]
pub struct CvOptions {
    pub folds: Vec<usize>,
    /// Oversampling applied to each training fold and to the final refit.
    pub smote: Option<SmoteConfig>,
    pub seed: u64,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: vec![2, 5, 10],
            smote: Some(SmoteConfig::default()),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CvCell {
    pub hp_index: usize,
    pub hyper_params: HyperParams,
    pub folds: usize,
    pub fold_accuracies: Vec<f64>,
    /// Negative infinity when any fold failed to fit.
    pub mean_accuracy: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub family: ClassifierFamily,
    pub cells: Vec<CvCell>,
    pub best_cell: usize,
    pub model: TrainedClassifier,
}

impl CvOutcome {
    pub fn best(&self) -> &CvCell {
        &self.cells[self.best_cell]
    }
}

fn oversample(
    x: &EncodedMatrix,
    y: &LabelVector,
    cfg: &Option<SmoteConfig>,
    seed: u64,
) -> Result<(EncodedMatrix, LabelVector), ModelError> {
    match cfg {
        None => Ok((x.clone(), y.clone())),
        Some(c) => {
            let out = smote(x, y, &SmoteConfig { seed, ..c.clone() })?;
            Ok((out.x, out.y))
        }
    }
}

/// The final fit [`grid_search_cv`] performs for a winning cell; calling it
/// with the same inputs reproduces that model exactly.
pub fn refit(hp: &HyperParams, x: &EncodedMatrix, y: &LabelVector, opts: &CvOptions) -> Result<TrainedClassifier, ModelError> {
    let (xr, yr) = oversample(x, y, &opts.smote, seed::derive(opts.seed, "refit/smote"))?;
    fit(hp, &xr, &yr, seed::derive(opts.seed, "refit"))
}

fn run_cell(
    hp: &HyperParams,
    x: &EncodedMatrix,
    y: &LabelVector,
    folds: &[Vec<usize>],
    smote_cfg: &Option<SmoteConfig>,
    cell_seed: u64,
) -> Result<Vec<f64>, ModelError> {
    let n = y.len();
    folds
        .iter()
        .enumerate()
        .map(|(f, test)| {
            let mut in_test = vec![false; n];
            test.iter().for_each(|&i| in_test[i] = true);
            let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
            let fold_seed = seed::derive_indexed(cell_seed, "fold", f as u64);
            let (xt, yt) = oversample(
                &x.select_rows(&train),
                &y.select(&train),
                smote_cfg,
                seed::derive(fold_seed, "smote"),
            )?;
            let model = fit(hp, &xt, &yt, seed::derive(fold_seed, "fit"))?;
            let yhat = predict_labels(&model, &x.select_rows(test))?;
            Ok(metrics(&confusion(&yhat, &y.select(test))?).accuracy)
        })
        .collect()
}

/// Scores every (hyperparameters, fold count) cell by mean stratified CV
/// accuracy, picks the best (ties: fewer folds, then earlier grid entry) and
/// refits it on all of `x`.
pub fn grid_search_cv(
    grid: &[HyperParams],
    x: &EncodedMatrix,
    y: &LabelVector,
    opts: &CvOptions,
) -> Result<CvOutcome, ModelError> {
    let Some(first) = grid.first() else {
        return Err(ModelError::InvalidHyperParams("empty grid".into()));
    };
    let family = first.family();
    if let Some(other) = grid.iter().find(|h| h.family() != family) {
        return Err(ModelError::InvalidHyperParams(format!(
            "grid mixes {family} with {}",
            other.family()
        )));
    }
    if opts.folds.is_empty() {
        return Err(ModelError::InvalidHyperParams("no fold counts".into()));
    }
    let mut splits = Vec::with_capacity(opts.folds.len());
    for &k in &opts.folds {
        splits.push(stratified_kfold(y, k, seed::derive_indexed(opts.seed, "folds", k as u64))?);
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|h| (0..opts.folds.len()).map(move |f| (h, f)))
        .collect();
    let cells: Vec<CvCell> = jobs
        .par_iter()
        .map(|&(h, f)| {
            let k = opts.folds[f];
            let cell_seed = seed::derive(opts.seed, &format!("cell/{h}/{k}"));
            let outcome = run_cell(&grid[h], x, y, &splits[f], &opts.smote, cell_seed);
            let (fold_accuracies, mean_accuracy, error) = match outcome {
                Ok(acc) => {
                    let mean = acc.iter().sum::<f64>() / acc.len() as f64;
                    (acc, mean, None)
                }
                Err(e) => (Vec::new(), f64::NEG_INFINITY, Some(e.to_string())),
            };
            CvCell {
                hp_index: h,
                hyper_params: grid[h].clone(),
                folds: k,
                fold_accuracies,
                mean_accuracy,
                error,
            }
        })
        .collect();
    let mut best = 0;
    for (i, c) in cells.iter().enumerate().skip(1) {
        let b = &cells[best];
        let better = if (c.mean_accuracy - b.mean_accuracy).abs() <= 1e-12 || c.mean_accuracy == b.mean_accuracy {
            (c.folds, c.hp_index) < (b.folds, b.hp_index)
        } else {
            c.mean_accuracy > b.mean_accuracy
        };
        if better {
            best = i;
        }
    }
    if cells[best].mean_accuracy == f64::NEG_INFINITY {
        let reason = cells[best].error.clone().unwrap_or_default();
        return Err(ModelError::InvalidHyperParams(format!(
            "every {family} grid cell failed; first error: {reason}"
        )));
    }
    let model = refit(&cells[best].hyper_params, x, y, opts)?;
    Ok(CvOutcome {
        family,
        cells,
        best_cell: best,
        model,
    })
}
