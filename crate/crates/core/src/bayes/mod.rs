//! Bayesian neural network: priors, log-joint with exact gradients, NUTS
//! sampling, posterior prediction and uncertainty decomposition.

pub mod net;
pub mod nuts;
mod posterior;
pub mod prior;

use thiserror::Error;

pub use net::{forward, BnnTarget};
pub use nuts::{leapfrog, nuts_sample, ChainDiagnostics, LogDensity, NutsConfig, NutsOutput};
pub use posterior::{
    evaluate_bnn, fit_bnn, posterior_predict, uncertainty, PosteriorSampleSet, PredictiveDraws, Uncertainty,
};
pub use prior::{PriorFamily, PriorSpec};

#[derive(Debug, Error)]
pub enum BayesError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("log density or gradient is not finite")]
    NonFinite,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no finite initial point found")]
    InitFailed,
    #[error("{divergences} of {draws} draws diverged")]
    AllDivergent {
        divergences: usize,
        draws: usize,
        diagnostics: Vec<ChainDiagnostics>,
    },
    #[error("need at least 2 posterior draws, got {0}")]
    InsufficientDraws(usize),
    #[error("feature mismatch: samples use {expected:?}, matrix has {found:?}")]
    FeatureMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed sample file: {0}")]
    Format(String),
    #[error(transparent)]
    Metrics(#[from] crate::models::ModelError),
}
