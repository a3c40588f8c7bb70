use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, FeatureSchema};
use super::table::{DatasetTable, Record, Value};
use super::DataError;

/// Level-to-code table for one column. `levels[c]` is the level with code `c`;
/// numeric columns carry no levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnEncoding {
    pub name: String,
    pub kind: ColumnKind,
    pub levels: Vec<String>,
}

impl ColumnEncoding {
    pub fn code_of(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }

    pub fn level_of(&self, code: f64) -> Option<&str> {
        let rounded = code.round();
        if (code - rounded).abs() > 1e-9 || rounded < 0.0 {
            return None;
        }
        self.levels.get(rounded as usize).map(String::as_str)
    }
}

/// Per-column z-scoring fitted on a training matrix. Constant columns are
/// flagged and passed through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
    pub constant: Vec<bool>,
}

impl Scaler {
    pub fn fit(values: &Array2<f64>) -> Self {
        let n = values.nrows();
        let mut mean = Vec::with_capacity(values.ncols());
        let mut std_dev = Vec::with_capacity(values.ncols());
        let mut constant = Vec::with_capacity(values.ncols());
        for col in values.axis_iter(Axis(1)) {
            let m = col.sum() / n as f64;
            let var = if n > 1 {
                col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            let sd = var.sqrt();
            let flat = !(sd > 0.0) || !sd.is_finite();
            mean.push(m);
            std_dev.push(sd);
            constant.push(flat);
        }
        Self {
            mean,
            std_dev,
            constant,
        }
    }

    pub fn transform(&self, values: &Array2<f64>) -> Array2<f64> {
        let mut out = values.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            if self.constant[j] {
                continue;
            }
            col.mapv_inplace(|v| (v - self.mean[j]) / self.std_dev[j]);
        }
        out
    }

    pub fn inverse(&self, values: &Array2<f64>) -> Array2<f64> {
        let mut out = values.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            if self.constant[j] {
                continue;
            }
            col.mapv_inplace(|v| v * self.std_dev[j] + self.mean[j]);
        }
        out
    }
}

/// Numeric design matrix with the metadata needed to interpret and invert it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    pub values: Array2<f64>,
    pub feature_names: Vec<String>,
    pub encoding: Vec<ColumnEncoding>,
    pub scaler: Option<Scaler>,
}

impl EncodedMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), idx),
            ..self.clone_meta()
        }
    }

    /// Keeps the given columns in the order listed.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(1), idx),
            feature_names: idx.iter().map(|&j| self.feature_names[j].clone()).collect(),
            encoding: idx.iter().filter_map(|&j| self.encoding.get(j).cloned()).collect(),
            scaler: self.scaler.as_ref().map(|s| Scaler {
                mean: idx.iter().map(|&j| s.mean[j]).collect(),
                std_dev: idx.iter().map(|&j| s.std_dev[j]).collect(),
                constant: idx.iter().map(|&j| s.constant[j]).collect(),
            }),
        }
    }

    /// Column indices of `names`, in matrix order.
    pub fn column_indices(&self, names: &[String]) -> Result<Vec<usize>, DataError> {
        let mut idx = Vec::with_capacity(names.len());
        for name in names {
            idx.push(
                self.feature_names
                    .iter()
                    .position(|f| f == name)
                    .ok_or_else(|| DataError::MissingColumn(name.clone()))?,
            );
        }
        idx.sort_unstable();
        Ok(idx)
    }

    pub fn with_values(&self, values: Array2<f64>) -> Self {
        assert_eq!(values.ncols(), self.n_cols());
        Self {
            values,
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Self {
        Self {
            values: Array2::zeros((0, 0)),
            feature_names: self.feature_names.clone(),
            encoding: self.encoding.clone(),
            scaler: self.scaler.clone(),
        }
    }
}

/// Binary targets, 1 = positive class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(labels: Vec<u8>) -> Result<Self, DataError> {
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(DataError::InvalidLabel(bad));
        }
        Ok(Self(labels))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `[count of 0, count of 1]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.0.iter().filter(|&&l| l == 1).count();
        [self.0.len() - ones, ones]
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self(idx.iter().map(|&i| self.0[i]).collect())
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

/// Maps every feature to a real column: ordinal and binary columns to their
/// declared position, nominal columns to first-appearance codes, numeric
/// columns unchanged. The target is split off as the label vector.
pub fn encode(
    table: &DatasetTable,
    schema: &FeatureSchema,
) -> Result<(EncodedMatrix, LabelVector), DataError> {
    if table.feature_columns != schema.feature_names() {
        return Err(DataError::Shape(
            "table columns do not follow the schema".into(),
        ));
    }
    let n = table.n();
    let d = schema.columns.len();
    let mut encoding = Vec::with_capacity(d);
    for (j, spec) in schema.columns.iter().enumerate() {
        let levels = match spec.kind {
            ColumnKind::Numeric => Vec::new(),
            ColumnKind::Binary | ColumnKind::Ordinal => spec.levels.clone(),
            ColumnKind::Nominal => {
                let mut order: Vec<String> = Vec::new();
                for row in &table.rows {
                    if let Some(level) = row.features[j].as_level() {
                        if !order.iter().any(|l| l == level) {
                            order.push(level.to_string());
                        }
                    }
                }
                // unseen declared levels keep the map total
                for level in &spec.levels {
                    if !order.contains(level) {
                        order.push(level.clone());
                    }
                }
                order
            }
        };
        encoding.push(ColumnEncoding {
            name: spec.name.clone(),
            kind: spec.kind,
            levels,
        });
    }

    let mut values = Array2::zeros((n, d));
    for (i, row) in table.rows.iter().enumerate() {
        for (j, enc) in encoding.iter().enumerate() {
            values[[i, j]] = match &row.features[j] {
                Value::Number(x) => *x,
                Value::Level(level) => enc.code_of(level).ok_or_else(|| DataError::UnknownLevel {
                    row: i + 1,
                    column: enc.name.clone(),
                    level: level.clone(),
                })? as f64,
            };
        }
    }
    let positive = &schema.target.levels[1];
    let labels = table
        .rows
        .iter()
        .map(|r| u8::from(&r.target == positive))
        .collect();
    Ok((
        EncodedMatrix {
            values,
            feature_names: schema.feature_names(),
            encoding,
            scaler: None,
        },
        LabelVector(labels),
    ))
}

/// Inverse of [`encode`]; undoes scaling first when a scaler is attached.
pub fn decode(
    matrix: &EncodedMatrix,
    labels: &LabelVector,
    schema: &FeatureSchema,
) -> Result<DatasetTable, DataError> {
    if labels.len() != matrix.n_rows() {
        return Err(DataError::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            matrix.n_rows()
        )));
    }
    let values = match &matrix.scaler {
        Some(s) => s.inverse(&matrix.values),
        None => matrix.values.clone(),
    };
    let mut rows = Vec::with_capacity(matrix.n_rows());
    for (i, &label) in labels.as_slice().iter().enumerate() {
        let mut features = Vec::with_capacity(matrix.n_cols());
        for (j, enc) in matrix.encoding.iter().enumerate() {
            let v = values[[i, j]];
            features.push(match enc.kind {
                ColumnKind::Numeric => Value::Number(v),
                _ => Value::Level(
                    enc.level_of(v)
                        .ok_or_else(|| DataError::Shape(format!(
                            "value {v} is not a code of column `{}`",
                            enc.name
                        )))?
                        .to_string(),
                ),
            });
        }
        rows.push(Record {
            features,
            target: schema.target.levels[label as usize].clone(),
        });
    }
    Ok(DatasetTable {
        feature_columns: matrix.feature_names.clone(),
        target_column: schema.target.name.clone(),
        target_levels: schema.target.levels.clone(),
        rows,
    })
}

/// Fits a scaler on `train` and applies it to `train` and every matrix in
/// `others`.
pub fn standardize(train: &EncodedMatrix, others: &[&EncodedMatrix]) -> (EncodedMatrix, Vec<EncodedMatrix>) {
    let scaler = Scaler::fit(&train.values);
    let apply = |m: &EncodedMatrix| EncodedMatrix {
        values: scaler.transform(&m.values),
        feature_names: m.feature_names.clone(),
        encoding: m.encoding.clone(),
        scaler: Some(scaler.clone()),
    };
    (apply(train), others.iter().map(|m| apply(m)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn matrix(values: Array2<f64>) -> EncodedMatrix {
        let d = values.ncols();
        EncodedMatrix {
            values,
            feature_names: (0..d).map(|j| format!("f{j}")).collect(),
            encoding: (0..d)
                .map(|j| ColumnEncoding {
                    name: format!("f{j}"),
                    kind: ColumnKind::Numeric,
                    levels: vec![],
                })
                .collect(),
            scaler: None,
        }
    }

    #[test]
    fn two_point_column_uses_sample_sd() {
        let (train, _) = standardize(&matrix(array![[0.0], [2.0]]), &[]);
        let h = 1.0 / 2f64.sqrt();
        assert!((train.values[[0, 0]] + h).abs() < 1e-12);
        assert!((train.values[[1, 0]] - h).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_flagged_and_untouched() {
        let (train, _) = standardize(&matrix(array![[3.0], [3.0], [3.0]]), &[]);
        assert!(train.scaler.as_ref().unwrap().constant[0]);
        assert_eq!(train.values, array![[3.0], [3.0], [3.0]]);
    }

    #[test]
    fn test_value_at_train_mean_maps_to_zero() {
        let train = matrix(array![[1.0], [3.0], [5.0]]);
        let test = matrix(array![[3.0]]);
        let (_, others) = standardize(&train, &[&test]);
        assert_eq!(others[0].values[[0, 0]], 0.0);
    }

    #[test]
    fn labels_reject_non_binary() {
        assert!(LabelVector::new(vec![0, 1, 2]).is_err());
        assert_eq!(LabelVector::new(vec![0, 1, 1]).unwrap().class_counts(), [1, 2]);
    }
}
