use std::fs;
use std::path::Path;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::net::{self, BnnTarget};
use super::nuts::{nuts_sample, ChainDiagnostics, NutsConfig};
use super::prior::PriorSpec;
use super::BayesError;
use crate::data::{EncodedMatrix, LabelVector};
use crate::models::{confusion, metrics, MetricsReport};

/// Posterior draws of the unconstrained parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSampleSet {
    pub prior: PriorSpec,
    pub feature_names: Vec<String>,
    /// `chains * draws_per_chain` rows, chain-major.
    pub samples: Array2<f64>,
    pub chains: usize,
    pub draws_per_chain: usize,
    pub diagnostics: Vec<ChainDiagnostics>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    prior: PriorSpec,
    feature_names: Vec<String>,
    chains: usize,
    draws_per_chain: usize,
    diagnostics: Vec<ChainDiagnostics>,
}

impl PosteriorSampleSet {
    pub fn n_draws(&self) -> usize {
        self.samples.nrows()
    }

    /// Network weights of draw `s`.
    pub fn weights(&self, s: usize) -> Vec<f64> {
        let row = self.samples.row(s);
        net::effective_weights(row.as_slice().expect("standard layout"), &self.prior).into_owned()
    }

    /// Every `step`-th draw, keeping chain structure only nominally.
    pub fn thinned(&self, max_draws: usize) -> Self {
        let n = self.n_draws();
        if max_draws == 0 || n <= max_draws {
            return self.clone();
        }
        let step = n.div_ceil(max_draws);
        let idx: Vec<usize> = (0..n).step_by(step).collect();
        Self {
            samples: self.samples.select(Axis(0), &idx),
            chains: 1,
            draws_per_chain: idx.len(),
            ..self.clone()
        }
    }

    /// Writes `<stem>.csv` (one draw per row) and `<stem>.json` (prior,
    /// features, diagnostics).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(), BayesError> {
        let io = |path: &Path| {
            let p = path.display().to_string();
            move |source| BayesError::Io { path: p, source }
        };
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut text = String::new();
        let header: Vec<String> = (0..self.samples.ncols()).map(|k| format!("theta_{k}")).collect();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in self.samples.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        fs::write(&csv_path, text).map_err(io(&csv_path))?;
        let json_path = dir.join(format!("{stem}.json"));
        let sidecar = Sidecar {
            prior: self.prior,
            feature_names: self.feature_names.clone(),
            chains: self.chains,
            draws_per_chain: self.draws_per_chain,
            diagnostics: self.diagnostics.clone(),
        };
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        fs::write(&json_path, json).map_err(io(&json_path))
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self, BayesError> {
        let read = |path: &Path| {
            fs::read_to_string(path).map_err(|source| BayesError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        let sidecar: Sidecar = serde_json::from_str(&read(&dir.join(format!("{stem}.json")))?)
            .map_err(|e| BayesError::Format(e.to_string()))?;
        let text = read(&dir.join(format!("{stem}.csv")))?;
        let mut lines = text.lines();
        let width = lines.next().ok_or_else(|| BayesError::Format("empty sample file".into()))?.split(',').count();
        let mut flat = Vec::new();
        let mut rows = 0;
        for line in lines {
            for cell in line.split(',') {
                flat.push(cell.parse::<f64>().map_err(|e| BayesError::Format(format!("{cell:?}: {e}")))?);
            }
            rows += 1;
        }
        let samples = Array2::from_shape_vec((rows, width), flat).map_err(|e| BayesError::Format(e.to_string()))?;
        if rows != sidecar.chains * sidecar.draws_per_chain {
            return Err(BayesError::Format(format!(
                "{rows} rows but sidecar declares {} x {}",
                sidecar.chains, sidecar.draws_per_chain
            )));
        }
        Ok(Self {
            prior: sidecar.prior,
            feature_names: sidecar.feature_names,
            samples,
            chains: sidecar.chains,
            draws_per_chain: sidecar.draws_per_chain,
            diagnostics: sidecar.diagnostics,
        })
    }
}

/// Samples the network posterior for one prior. Chains start near zero.
pub fn fit_bnn(x: &EncodedMatrix, y: &LabelVector, prior: PriorSpec, cfg: &NutsConfig) -> Result<PosteriorSampleSet, BayesError> {
    let target = BnnTarget::new(x.values.view(), y.as_slice(), prior)?;
    let init = vec![0.0; net::dim(x.n_cols(), &prior)];
    let out = nuts_sample(&target, &init, cfg)?;
    Ok(PosteriorSampleSet {
        prior,
        feature_names: x.feature_names.clone(),
        samples: out.samples,
        chains: out.chains,
        draws_per_chain: out.draws,
        diagnostics: out.diagnostics,
    })
}

/// Per-draw class-1 probabilities: `probs[[s, i]]` for draw s and row i.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDraws {
    pub probs: Array2<f64>,
}

pub fn posterior_predict(samples: &PosteriorSampleSet, x: &EncodedMatrix) -> Result<PredictiveDraws, BayesError> {
    if samples.feature_names != x.feature_names {
        return Err(BayesError::FeatureMismatch {
            expected: samples.feature_names.clone(),
            found: x.feature_names.clone(),
        });
    }
    let rows: Vec<Vec<f64>> = (0..samples.n_draws())
        .into_par_iter()
        .map(|s| net::forward_batch(&samples.weights(s), x.values.view()))
        .collect();
    let m = x.n_rows();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(PredictiveDraws {
        probs: Array2::from_shape_vec((samples.n_draws(), m), flat).expect("shape"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uncertainty {
    pub mean: f64,
    /// Population variance of the draws.
    pub epistemic: f64,
    /// Mean Bernoulli variance of the draws.
    pub aleatoric: f64,
}

/// Splits predictive variance per instance; `epistemic + aleatoric` equals
/// `mean * (1 - mean)`.
pub fn uncertainty(draws: &PredictiveDraws) -> Result<Vec<Uncertainty>, BayesError> {
    let s = draws.probs.nrows();
    if s < 2 {
        return Err(BayesError::InsufficientDraws(s));
    }
    Ok(draws
        .probs
        .axis_iter(Axis(1))
        .map(|col| {
            let n = s as f64;
            let mean = col.sum() / n;
            let epistemic = col.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
            let aleatoric = col.iter().map(|p| p * (1.0 - p)).sum::<f64>() / n;
            Uncertainty {
                mean,
                epistemic,
                aleatoric,
            }
        })
        .collect())
}

/// Metrics of the posterior-mean classifier (label 1 when mean > 0.5).
pub fn evaluate_bnn(samples: &PosteriorSampleSet, x: &EncodedMatrix, y: &LabelVector) -> Result<MetricsReport, BayesError> {
    let draws = posterior_predict(samples, x)?;
    let means = draws.probs.mean_axis(Axis(0)).expect("at least one draw");
    let yhat: Vec<u8> = means.iter().map(|&p| crate::models::label_of(p)).collect();
    Ok(metrics(&confusion(&yhat, y)?))
}
