//! CART trees shared by the decision tree, random forest, gradient boosting
//! and Boruta.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Split quality measure. `Gini` treats targets as 0/1 labels, `Mse` as reals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Gini,
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    /// Nodes with fewer samples become leaves.
    pub min_split: usize,
    /// Features examined per node; `None` means all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_split: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    /// Weighted impurity decrease per feature, in units of root impurity mass.
    pub importance: Vec<f64>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Index of the leaf reached by `x`.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut at = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = &self.nodes[at]
        {
            at = if x[*feature] <= *threshold { *left } else { *right };
        }
        at
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

struct Builder<'a, R> {
    x: ArrayView2<'a, f64>,
    target: &'a [f64],
    criterion: Criterion,
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    root_n: f64,
    leaf_samples: Vec<(usize, Vec<usize>)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn impurity(criterion: Criterion, n: f64, sum: f64, sum_sq: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let mean = sum / n;
    match criterion {
        Criterion::Gini => 2.0 * mean * (1.0 - mean),
        Criterion::Mse => (sum_sq / n - mean * mean).max(0.0),
    }
}

impl<R: Rng> Builder<'_, R> {
    fn build(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let n = samples.len();
        let (sum, sum_sq) = samples.iter().fold((0.0, 0.0), |(s, q), &i| {
            let t = self.target[i];
            (s + t, q + t * t)
        });
        let node_impurity = impurity(self.criterion, n as f64, sum, sum_sq);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: sum / n as f64,
            samples: n,
        });
        let depth_left = self.params.max_depth.is_none_or(|m| depth < m);
        if !depth_left || n < self.params.min_split.max(2) || node_impurity <= 1e-15 {
            self.leaf_samples.push((at, samples));
            return at;
        }
        let Some(best) = self.best_split(&samples, node_impurity) else {
            self.leaf_samples.push((at, samples));
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.x[[i, best.feature]] <= best.threshold);
        self.importance[best.feature] += best.gain * n as f64 / self.root_n;
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }

    fn best_split(&mut self, samples: &[usize], node_impurity: f64) -> Option<BestSplit> {
        let d = self.x.ncols();
        // A subsample is scanned in random order so equal gains do not favour
        // low column indices; the full set is scanned in index order.
        let features: Vec<usize> = match self.params.max_features {
            Some(m) if m < d => {
                let mut f = sample(self.rng, d, m.max(1)).into_vec();
                f.shuffle(self.rng);
                f
            }
            _ => (0..d).collect(),
        };
        let n = samples.len() as f64;
        let mut best: Option<BestSplit> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
        for &f in &features {
            pairs.clear();
            pairs.extend(samples.iter().map(|&i| (self.x[[i, f]], self.target[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (total, total_sq) = pairs.iter().fold((0.0, 0.0), |(s, q), p| (s + p.1, q + p.1 * p.1));
            let (mut ls, mut lq) = (0.0, 0.0);
            for k in 0..pairs.len() - 1 {
                ls += pairs[k].1;
                lq += pairs[k].1 * pairs[k].1;
                if pairs[k].0 == pairs[k + 1].0 {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let child = (nl * impurity(self.criterion, nl, ls, lq)
                    + nr * impurity(self.criterion, nr, total - ls, total_sq - lq))
                    / n;
                let gain = node_impurity - child;
                if best.as_ref().is_none_or(|b| gain > b.gain + 1e-12) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold: 0.5 * (pairs[k].0 + pairs[k + 1].0),
                        gain,
                    });
                }
            }
        }
        best
    }
}

/// Grows one tree on the rows listed in `samples` (repeats allowed, as in a
/// bootstrap draw). Leaves hold the mean target of their samples.
pub fn grow<R: Rng>(
    x: ArrayView2<'_, f64>,
    target: &[f64],
    samples: Vec<usize>,
    criterion: Criterion,
    params: TreeParams,
    rng: &mut R,
) -> Tree {
    grow_with_leaves(x, target, samples, criterion, params, rng).0
}

/// Like [`grow`] but also returns the sample indices that landed in each leaf,
/// so callers can refit leaf values.
pub fn grow_with_leaves<R: Rng>(
    x: ArrayView2<'_, f64>,
    target: &[f64],
    samples: Vec<usize>,
    criterion: Criterion,
    params: TreeParams,
    rng: &mut R,
) -> (Tree, Vec<(usize, Vec<usize>)>) {
    assert!(!samples.is_empty(), "cannot grow a tree on zero samples");
    let mut builder = Builder {
        x,
        target,
        criterion,
        params,
        rng,
        nodes: Vec::new(),
        importance: vec![0.0; x.ncols()],
        root_n: samples.len() as f64,
        leaf_samples: Vec::new(),
    };
    builder.build(samples, 0);
    let leaves = std::mem::take(&mut builder.leaf_samples);
    (
        Tree {
            nodes: builder.nodes,
            importance: builder.importance,
        },
        leaves,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use ndarray::array;

    #[test]
    fn xor_needs_and_gets_two_levels() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = [0.0, 1.0, 1.0, 0.0];
        let params = TreeParams { max_depth: Some(2), ..Default::default() };
        let tree = grow(x.view(), &y, (0..4).collect(), Criterion::Gini, params, &mut seed::rng(0));
        for (row, &label) in x.rows().into_iter().zip(&y) {
            assert_eq!(tree.predict(row.as_slice().unwrap()), label);
        }
        assert_eq!(tree.depth(), 2);
        // zero-gain root split goes to the lowest feature index
        assert!(matches!(tree.nodes[0], Node::Split { feature: 0, threshold, .. } if threshold == 0.5));
    }

    #[test]
    fn equal_gain_prefers_lower_feature() {
        let x = array![[0.0, 0.0], [1.0, 1.0]];
        let tree = grow(x.view(), &[0.0, 1.0], vec![0, 1], Criterion::Gini, TreeParams::default(), &mut seed::rng(0));
        assert!(matches!(tree.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn regression_tree_splits_on_variance() {
        let x = array![[1.0], [2.0], [3.0], [4.0]];
        let t = [1.0, 1.0, 5.0, 5.0];
        let tree = grow(x.view(), &t, (0..4).collect(), Criterion::Mse, TreeParams::default(), &mut seed::rng(0));
        assert_eq!(tree.predict(&[1.5]), 1.0);
        assert_eq!(tree.predict(&[3.5]), 5.0);
        assert!((tree.importance[0] - 4.0).abs() < 1e-12);
    }
}
