use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::encode::LabelVector;
use super::DataError;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Per class, shuffles the member indices and sends `round(ratio * size)` of
/// them to the training side. Both index lists come back sorted.
pub fn stratified_split(y: &LabelVector, ratio: f64, seed: u64) -> Result<SplitIndices, DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::InvalidRatio(ratio));
    }
    let mut rng = seed::rng(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in [0u8, 1] {
        let mut members: Vec<usize> = y
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 2 {
            return Err(DataError::ClassTooSmall {
                class,
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        let n_train = (ratio * members.len() as f64).round() as usize;
        train_idx.extend_from_slice(&members[..n_train]);
        test_idx.extend_from_slice(&members[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(SplitIndices {
        train_idx,
        test_idx,
        seed,
        ratio,
    })
}
