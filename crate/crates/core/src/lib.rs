//! Uncertainty-aware tabular classification toolkit.
//!
//! The crate covers a complete small-cohort workflow: schema-driven CSV
//! ingest and encoding ([`data`]), minority oversampling ([`resample`]),
//! classical classifier baselines with grid-search cross-validation
//! ([`models`]), shadow-feature selection ([`boruta`]), a one-hidden-layer
//! Bayesian neural network sampled with the No-U-Turn Sampler ([`bayes`]),
//! exact Shapley attributions ([`explain`]) and SVG charts ([`plot`]).
//!
//! Every stochastic routine takes an explicit seed; see [`seed`] for how
//! seeds are split between consumers.

pub mod bayes;
pub mod boruta;
pub mod data;
pub mod explain;
pub mod models;
pub mod plot;
pub mod resample;
pub mod seed;

pub use data::{DatasetTable, EncodedMatrix, FeatureSchema, LabelVector};
pub use models::{ClassifierFamily, ConfusionMatrix, HyperParams, MetricsReport, TrainedClassifier};
