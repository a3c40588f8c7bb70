//! Tabular ingest: schema, CSV loading, descriptive statistics, encoding,
//! standardization and stratified splitting.

mod encode;
mod schema;
mod split;
mod stats;
mod table;

pub use encode::{
    decode, encode, standardize, ColumnEncoding, EncodedMatrix, LabelVector, Scaler,
};
pub use schema::{ColumnKind, ColumnSpec, FeatureSchema, TargetSpec};
pub use split::{stratified_split, SplitIndices};
pub use stats::{descriptive_stats, CategoricalSummary, ClassSplit, LevelCount, NumericSummary, StatsReport};
pub use table::{load_csv, parse_csv, DatasetTable, Record, Value};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("file contains a header but no data rows")]
    EmptyFile,
    #[error("row {row}: empty cell in column `{column}`")]
    MissingCell { row: usize, column: String },
    #[error("row {row}: level `{level}` is not declared for column `{column}`")]
    UnknownLevel {
        row: usize,
        column: String,
        level: String,
    },
    #[error("row {row}: `{value}` in column `{column}` is not a number")]
    NotNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("class {class} has {count} member(s); at least 2 are required")]
    ClassTooSmall { class: u8, count: usize },
    #[error("split ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error("labels must be 0 or 1, found {0}")]
    InvalidLabel(u8),
    #[error("shape mismatch: {0}")]
    Shape(String),
}
