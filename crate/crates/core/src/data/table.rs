use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, FeatureSchema};
use super::DataError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Level(String),
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            Value::Level(_) => None,
        }
    }

    pub fn as_level(&self) -> Option<&str> {
        match self {
            Value::Level(s) => Some(s),
            Value::Number(_) => None,
        }
    }
}

/// One patient: feature values in schema order plus the target level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub features: Vec<Value>,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetTable {
    pub feature_columns: Vec<String>,
    pub target_column: String,
    /// `[negative, positive]`.
    pub target_levels: Vec<String>,
    pub rows: Vec<Record>,
}

impl DatasetTable {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_columns.iter().position(|c| c == name)
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<DatasetTable, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(file, schema)
}

/// Parses comma-separated UTF-8 text whose first row is a header. Columns may
/// appear in any order; unknown extra columns are ignored.
pub fn parse_csv<R: Read>(reader: R, schema: &FeatureSchema) -> Result<DatasetTable, DataError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = csv
        .headers()?
        .iter()
        .map(|h| schema.resolve(h).to_string())
        .collect();
    let locate = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let feature_pos = schema
        .columns
        .iter()
        .map(|c| locate(&c.name))
        .collect::<Result<Vec<_>, _>>()?;
    let target_pos = locate(&schema.target.name)?;

    let mut rows = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        // 1-based data row numbers, header excluded
        let row = i + 1;
        let cell = |pos: usize, column: &str| -> Result<String, DataError> {
            match record.get(pos) {
                Some(v) if !v.is_empty() => Ok(v.to_string()),
                _ => Err(DataError::MissingCell {
                    row,
                    column: column.to_string(),
                }),
            }
        };
        let mut features = Vec::with_capacity(schema.columns.len());
        for (spec, &pos) in schema.columns.iter().zip(&feature_pos) {
            let raw = cell(pos, &spec.name)?;
            let value = match spec.kind {
                ColumnKind::Numeric => {
                    let x: f64 = raw.parse().map_err(|_| DataError::NotNumeric {
                        row,
                        column: spec.name.clone(),
                        value: raw.clone(),
                    })?;
                    if !x.is_finite() {
                        return Err(DataError::NotNumeric {
                            row,
                            column: spec.name.clone(),
                            value: raw,
                        });
                    }
                    Value::Number(x)
                }
                _ => {
                    if !spec.levels.contains(&raw) {
                        return Err(DataError::UnknownLevel {
                            row,
                            column: spec.name.clone(),
                            level: raw,
                        });
                    }
                    Value::Level(raw)
                }
            };
            features.push(value);
        }
        let target = cell(target_pos, &schema.target.name)?;
        if !schema.target.levels.contains(&target) {
            return Err(DataError::UnknownLevel {
                row,
                column: schema.target.name.clone(),
                level: target,
            });
        }
        rows.push(Record { features, target });
    }
    if rows.is_empty() {
        return Err(DataError::EmptyFile);
    }
    Ok(DatasetTable {
        feature_columns: schema.feature_names(),
        target_column: schema.target.name.clone(),
        target_levels: schema.target.levels.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> FeatureSchema {
        FeatureSchema::from_json_str(
            r#"{"columns":[{"name":"Age","kind":"numeric"},
                           {"name":"Goiter","kind":"nominal","levels":["Diffuse goiter","Normal"]}],
                "target":{"name":"Recurred","levels":["No","Yes"]},
                "aliases":{"Physical Examination":"Goiter"}}"#,
        )
        .unwrap()
    }

    #[test]
    fn header_only_is_empty_file() {
        let err = parse_csv("Age,Goiter,Recurred\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, DataError::EmptyFile));
    }

    #[test]
    fn unknown_level_reports_row_and_column() {
        let text = "Age,Physical Examination,Recurred\n30,Normal,No\n41,Giant,Yes\n";
        match parse_csv(text.as_bytes(), &schema()).unwrap_err() {
            DataError::UnknownLevel { row, column, level } => {
                assert_eq!((row, column.as_str(), level.as_str()), (2, "Goiter", "Giant"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_cell() {
        let err = parse_csv("Age,Recurred\n3,No\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn(c) if c == "Goiter"));
        let err = parse_csv("Age,Goiter,Recurred\n,Normal,No\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, DataError::MissingCell { row: 1, .. }));
    }

    #[test]
    fn reordered_columns_follow_schema_order() {
        let text = "Recurred,Goiter,Age\nYes,Normal,50\n";
        let table = parse_csv(text.as_bytes(), &schema()).unwrap();
        assert_eq!(table.rows[0].features[0], Value::Number(50.0));
        assert_eq!(table.rows[0].target, "Yes");
    }
}
