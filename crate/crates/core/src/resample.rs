//! SMOTE oversampling of the minority class.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{EncodedMatrix, LabelVector};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum ResampleError {
    #[error("minority class has {minority} row(s); SMOTE with k={k} needs more than k")]
    TooFewMinority { minority: usize, k: usize },
    #[error("both classes must be present")]
    SingleClass,
    #[error("invalid SMOTE configuration: {0}")]
    InvalidConfig(String),
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub seed: u64,
    /// Minority/majority count ratio after resampling.
    pub target_ratio: f64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            seed: 0,
            target_ratio: 1.0,
        }
    }
}

/// Which original minority rows produced a synthetic row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub base: usize,
    pub neighbor: usize,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct Resampled {
    /// Original rows first, synthetic rows appended.
    pub x: EncodedMatrix,
    pub y: LabelVector,
    pub origins: Vec<SyntheticOrigin>,
}

/// `base + gap * (neighbor - base)`.
pub fn interpolate(base: ArrayView1<'_, f64>, neighbor: ArrayView1<'_, f64>, gap: f64) -> Array1<f64> {
    &base + &((&neighbor - &base) * gap)
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Indices (into `rows`) of the k nearest other rows for each row; distance
/// ties go to the lower index.
fn nearest_neighbors(x: &Array2<f64>, rows: &[usize], k: usize) -> Vec<Vec<usize>> {
    rows.iter()
        .enumerate()
        .map(|(a, &ia)| {
            let mut cand: Vec<(f64, usize)> = rows
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != a)
                .map(|(b, &ib)| (sq_dist(x.row(ia), x.row(ib)), b))
                .collect();
            cand.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
            cand.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect()
}

pub fn smote(x: &EncodedMatrix, y: &LabelVector, cfg: &SmoteConfig) -> Result<Resampled, ResampleError> {
    if x.n_rows() != y.len() {
        return Err(ResampleError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    if cfg.k_neighbors == 0 {
        return Err(ResampleError::InvalidConfig("k_neighbors must be positive".into()));
    }
    if !(cfg.target_ratio > 0.0 && cfg.target_ratio <= 1.0) {
        return Err(ResampleError::InvalidConfig(format!(
            "target_ratio {} outside (0, 1]",
            cfg.target_ratio
        )));
    }
    let counts = y.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(ResampleError::SingleClass);
    }
    let minority_class: u8 = if counts[1] <= counts[0] { 1 } else { 0 };
    let minority = counts[minority_class as usize];
    let majority = counts[1 - minority_class as usize];
    if minority <= cfg.k_neighbors {
        return Err(ResampleError::TooFewMinority {
            minority,
            k: cfg.k_neighbors,
        });
    }
    let target = (cfg.target_ratio * majority as f64).round() as usize;
    let n_new = target.saturating_sub(minority);

    let rows: Vec<usize> = (0..y.len()).filter(|&i| y.as_slice()[i] == minority_class).collect();
    let neighbors = nearest_neighbors(&x.values, &rows, cfg.k_neighbors);
    let mut rng = seed::rng(cfg.seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut rng);

    let mut synthetic = Array2::zeros((n_new, x.n_cols()));
    let mut origins = Vec::with_capacity(n_new);
    for s in 0..n_new {
        let a = order[s % rows.len()];
        let b = neighbors[a][rng.random_range(0..cfg.k_neighbors)];
        let gap: f64 = rng.random();
        let point = interpolate(x.values.row(rows[a]), x.values.row(rows[b]), gap);
        synthetic.row_mut(s).assign(&point);
        origins.push(SyntheticOrigin {
            base: rows[a],
            neighbor: rows[b],
            gap,
        });
    }

    let values = ndarray::concatenate(Axis(0), &[x.values.view(), synthetic.view()])
        .expect("column counts agree");
    let mut labels = y.as_slice().to_vec();
    labels.extend(std::iter::repeat_n(minority_class, n_new));
    Ok(Resampled {
        x: x.with_values(values),
        y: LabelVector::new(labels).expect("labels are binary"),
        origins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnEncoding, ColumnKind};
    use ndarray::array;

    pub(crate) fn matrix(values: Array2<f64>) -> EncodedMatrix {
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
    fn midpoint_of_two_minority_points() {
        let p = interpolate(array![0.0, 0.0].view(), array![1.0, 1.0].view(), 0.5);
        assert_eq!(p, array![0.5, 0.5]);
    }

    #[test]
    fn two_minority_points_k1_stay_on_their_segment() {
        let x = matrix(array![[0.0, 0.0], [1.0, 1.0], [5.0, 5.0], [6.0, 6.0], [7.0, 7.0], [8.0, 8.0]]);
        let y = LabelVector::new(vec![1, 1, 0, 0, 0, 0]).unwrap();
        let cfg = SmoteConfig { k_neighbors: 1, seed: 9, target_ratio: 1.0 };
        let out = smote(&x, &y, &cfg).unwrap();
        assert_eq!(out.y.class_counts(), [4, 4]);
        for (s, o) in out.origins.iter().enumerate() {
            let row = out.x.values.row(6 + s);
            assert!((row[0] - row[1]).abs() < 1e-15);
            assert!((row[0] - o.gap * (o.neighbor as f64 - o.base as f64) - o.base as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_minority_points_replicate() {
        let x = matrix(array![[2.0, 3.0], [2.0, 3.0], [2.0, 3.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [5.0, 5.0]]);
        let y = LabelVector::new(vec![1, 1, 1, 0, 0, 0, 0, 0]).unwrap();
        let cfg = SmoteConfig { k_neighbors: 2, seed: 1, target_ratio: 1.0 };
        let out = smote(&x, &y, &cfg).unwrap();
        for row in out.x.values.rows().into_iter().skip(8) {
            assert_eq!(row, array![2.0, 3.0]);
        }
    }

    #[test]
    fn too_few_minority() {
        let x = matrix(array![[0.0], [1.0], [2.0]]);
        let y = LabelVector::new(vec![1, 0, 0]).unwrap();
        assert_eq!(
            smote(&x, &y, &SmoteConfig::default()).unwrap_err(),
            ResampleError::TooFewMinority { minority: 1, k: 5 }
        );
    }

    #[test]
    fn partial_target_ratio() {
        let x = matrix(Array2::from_shape_fn((30, 2), |(i, j)| (i * 3 + j) as f64));
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i < 8)).collect();
        let y = LabelVector::new(labels).unwrap();
        let cfg = SmoteConfig { k_neighbors: 3, seed: 4, target_ratio: 0.5 };
        let out = smote(&x, &y, &cfg).unwrap();
        assert_eq!(out.y.class_counts(), [22, 11]);
        assert_eq!(out.x.values.slice(ndarray::s![..30, ..]), x.values);
    }
}
