//! Shared fixtures for the benchmarks.

use ndarray::Array2;
use uqtab_core::data::{ColumnEncoding, ColumnKind};
use uqtab_core::{EncodedMatrix, LabelVector};

/// Deterministic two-class data: label 1 when a fixed linear score of the
/// first three columns is positive.
pub fn synthetic(n: usize, d: usize) -> (EncodedMatrix, LabelVector) {
    let values = Array2::from_shape_fn((n, d), |(i, j)| (((i * 31 + j * 17) % 97) as f64 / 48.5 - 1.0) * (1.0 + j as f64 * 0.1));
    let labels = (0..n)
        .map(|i| {
            let r = values.row(i);
            let score = r[0] - 0.5 * r[1.min(d - 1)] + 0.25 * r[2.min(d - 1)];
            u8::from(score > 0.0)
        })
        .collect();
    let x = EncodedMatrix {
        feature_names: (0..d).map(|j| format!("x{j}")).collect(),
        encoding: (0..d)
            .map(|j| ColumnEncoding {
                name: format!("x{j}"),
                kind: ColumnKind::Numeric,
                levels: vec![],
            })
            .collect(),
        scaler: None,
        values,
    };
    (x, LabelVector::new(labels).expect("binary labels"))
}
