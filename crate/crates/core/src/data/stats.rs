use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::table::{DatasetTable, Value};
use super::DataError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSummary {
    pub column: String,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample (n-1) standard deviation; reported as 0 when `n == 1`.
    pub std_dev: f64,
    pub std_dev_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCount {
    pub level: String,
    pub positive: usize,
    pub negative: usize,
    /// Percent of the whole table, not of the class.
    pub positive_pct: f64,
    pub negative_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalSummary {
    pub column: String,
    pub levels: Vec<LevelCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSplit {
    pub positive_level: String,
    pub negative_level: String,
    pub positive: usize,
    pub negative: usize,
    pub positive_pct: f64,
    pub negative_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub n: usize,
    pub target: ClassSplit,
    pub numeric: Vec<NumericSummary>,
    pub categorical: Vec<CategoricalSummary>,
}

impl StatsReport {
    pub fn numeric(&self, column: &str) -> Option<&NumericSummary> {
        self.numeric.iter().find(|s| s.column == column)
    }

    pub fn level(&self, column: &str, level: &str) -> Option<&LevelCount> {
        self.categorical
            .iter()
            .find(|c| c.column == column)?
            .levels
            .iter()
            .find(|l| l.level == level)
    }
}

fn pct(count: usize, n: usize) -> f64 {
    100.0 * count as f64 / n as f64
}

pub fn summarize(column: &str, values: &[f64]) -> NumericSummary {
    let n = values.len();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / n as f64;
    let (std_dev, std_dev_defined) = if n > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        ((ss / (n - 1) as f64).sqrt(), true)
    } else {
        (0.0, false)
    };
    NumericSummary {
        column: column.to_string(),
        n,
        min,
        max,
        mean,
        std_dev,
        std_dev_defined,
    }
}

/// Per-column summaries and a level-by-class cross tabulation. Levels are
/// listed alphabetically.
pub fn descriptive_stats(table: &DatasetTable) -> Result<StatsReport, DataError> {
    let n = table.n();
    if n == 0 {
        return Err(DataError::EmptyFile);
    }
    let positive_level = &table.target_levels[1];
    let is_positive: Vec<bool> = table.rows.iter().map(|r| &r.target == positive_level).collect();
    let positive = is_positive.iter().filter(|p| **p).count();

    let mut numeric = Vec::new();
    let mut categorical = Vec::new();
    for (j, column) in table.feature_columns.iter().enumerate() {
        match &table.rows[0].features[j] {
            Value::Number(_) => {
                let values: Vec<f64> = table
                    .rows
                    .iter()
                    .filter_map(|r| r.features[j].as_number())
                    .collect();
                numeric.push(summarize(column, &values));
            }
            Value::Level(_) => {
                let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
                for (row, &pos) in table.rows.iter().zip(&is_positive) {
                    if let Some(level) = row.features[j].as_level() {
                        let entry = counts.entry(level).or_default();
                        if pos {
                            entry.0 += 1;
                        } else {
                            entry.1 += 1;
                        }
                    }
                }
                categorical.push(CategoricalSummary {
                    column: column.clone(),
                    levels: counts
                        .into_iter()
                        .map(|(level, (p, q))| LevelCount {
                            level: level.to_string(),
                            positive: p,
                            negative: q,
                            positive_pct: pct(p, n),
                            negative_pct: pct(q, n),
                        })
                        .collect(),
                });
            }
        }
    }
    Ok(StatsReport {
        n,
        target: ClassSplit {
            positive_level: positive_level.clone(),
            negative_level: table.target_levels[0].clone(),
            positive,
            negative: n - positive,
            positive_pct: pct(positive, n),
            negative_pct: pct(n - positive, n),
        },
        numeric,
        categorical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::table::Record;

    fn one_row(age: f64) -> DatasetTable {
        DatasetTable {
            feature_columns: vec!["Age".into()],
            target_column: "Recurred".into(),
            target_levels: vec!["No".into(), "Yes".into()],
            rows: vec![Record {
                features: vec![Value::Number(age)],
                target: "Yes".into(),
            }],
        }
    }

    #[test]
    fn single_row_flags_undefined_sd() {
        let report = descriptive_stats(&one_row(50.0)).unwrap();
        let age = report.numeric("Age").unwrap();
        assert_eq!((age.min, age.max, age.mean), (50.0, 50.0, 50.0));
        assert_eq!(age.std_dev, 0.0);
        assert!(!age.std_dev_defined);
        assert_eq!(report.target.positive, 1);
    }

    #[test]
    fn sample_sd_uses_n_minus_one() {
        let s = summarize("x", &[0.0, 2.0]);
        assert!((s.std_dev - 2f64.sqrt()).abs() < 1e-15);
    }
}
