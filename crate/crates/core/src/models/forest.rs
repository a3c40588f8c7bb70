use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;

use super::tree::{self, Criterion, Tree, TreeParams};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub max_features: usize,
    pub bootstrap: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
}

impl RandomForest {
    /// Tree `t` draws from its own stream `derive_indexed(seed, "tree", t)`, so
    /// the result does not depend on thread scheduling.
    pub fn fit(x: ArrayView2<'_, f64>, labels: &[u8], params: &ForestParams, seed: u64) -> Self {
        let target: Vec<f64> = labels.iter().map(|&v| v as f64).collect();
        let n = labels.len();
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_split: 2,
            max_features: Some(params.max_features),
        };
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed::derive_indexed(seed, "tree", t as u64));
                let samples: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                tree::grow(x, &target, samples, Criterion::Gini, tree_params, &mut rng)
            })
            .collect();
        Self { trees }
    }

    /// Fraction of trees voting for class 1.
    pub fn proba(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(x) > 0.5).count();
        votes as f64 / self.trees.len() as f64
    }

    /// Mean impurity decrease per feature, normalized to sum to 1 (all zeros
    /// when no tree split).
    pub fn feature_importance(&self) -> Vec<f64> {
        let d = self.trees.first().map_or(0, |t| t.importance.len());
        let mut total = vec![0.0; d];
        for t in &self.trees {
            for (acc, v) in total.iter_mut().zip(&t.importance) {
                *acc += v;
            }
        }
        let sum: f64 = total.iter().sum();
        if sum > 0.0 {
            total.iter_mut().for_each(|v| *v /= sum);
        }
        total
    }
}
