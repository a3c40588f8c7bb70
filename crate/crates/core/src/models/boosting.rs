use ndarray::ArrayView2;

use super::sigmoid;
use super::tree::{self, Criterion, Node, Tree, TreeParams};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoosting {
    /// Log-odds of the training base rate.
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GradientBoosting {
    /// Each round fits a depth-limited regression tree to the residuals
    /// y - p and replaces leaf values with one Newton step
    /// sum(r) / sum(p (1 - p)).
    pub(crate) fn fit(
        x: ArrayView2<'_, f64>,
        labels: &[u8],
        n_trees: usize,
        learning_rate: f64,
        depth: usize,
        seed: u64,
    ) -> Self {
        let n = labels.len();
        let y: Vec<f64> = labels.iter().map(|&v| v as f64).collect();
        let rate = (y.iter().sum::<f64>() / n as f64).clamp(1e-12, 1.0 - 1e-12);
        let base_score = (rate / (1.0 - rate)).ln();
        let mut score = vec![base_score; n];
        let mut trees = Vec::with_capacity(n_trees);
        let params = TreeParams {
            max_depth: Some(depth),
            min_split: 2,
            max_features: None,
        };
        let mut rng = seed::rng(seed::derive(seed, "boosting"));
        for _ in 0..n_trees {
            let p: Vec<f64> = score.iter().map(|&s| sigmoid(s)).collect();
            let resid: Vec<f64> = y.iter().zip(&p).map(|(a, b)| a - b).collect();
            let (mut t, leaves) =
                tree::grow_with_leaves(x, &resid, (0..n).collect(), Criterion::Mse, params, &mut rng);
            for (node, members) in leaves {
                let num: f64 = members.iter().map(|&i| resid[i]).sum();
                let den: f64 = members.iter().map(|&i| p[i] * (1.0 - p[i])).sum();
                let value = num / den.max(1e-12);
                if let Node::Leaf { value: v, .. } = &mut t.nodes[node] {
                    *v = value;
                }
                for &i in &members {
                    score[i] += learning_rate * value;
                }
            }
            trees.push(t);
        }
        Self {
            base_score,
            learning_rate,
            trees,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}
