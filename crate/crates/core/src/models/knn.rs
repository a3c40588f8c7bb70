use ndarray::{Array2, ArrayView2};

#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    x: Array2<f64>,
    y: Vec<u8>,
    k: usize,
}

impl Knn {
    pub(crate) fn fit(x: ArrayView2<'_, f64>, labels: &[u8], k: usize) -> Self {
        Self {
            x: x.to_owned(),
            y: labels.to_vec(),
            k: k.min(labels.len()),
        }
    }

    pub fn n_train(&self) -> usize {
        self.y.len()
    }

    /// Fraction of class-1 labels among the k nearest rows; equal distances
    /// go to the lower row index.
    pub fn proba(&self, query: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .x
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| (row.iter().zip(query).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        let k = self.k;
        dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let votes: usize = dist[..k].iter().map(|&(_, i)| self.y[i] as usize).sum();
        votes as f64 / k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn distance_ties_take_lower_index() {
        let x = array![[1.0], [-1.0]];
        let m = Knn::fit(x.view(), &[1, 0], 1);
        assert_eq!(m.proba(&[0.0]), 1.0);
        let m = Knn::fit(x.view(), &[0, 1], 1);
        assert_eq!(m.proba(&[0.0]), 0.0);
    }
}
