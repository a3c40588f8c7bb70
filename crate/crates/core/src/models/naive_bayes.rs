use ndarray::ArrayView2;

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayes {
    /// `log_prior[c]` is -inf for a class absent from training.
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

impl NaiveBayes {
    /// Gaussian per-feature likelihoods. Every variance is inflated by
    /// `var_smoothing` times the largest feature variance.
    pub(crate) fn fit(x: ArrayView2<'_, f64>, labels: &[u8], var_smoothing: f64) -> Self {
        let n = labels.len();
        let d = x.ncols();
        let largest = (0..d)
            .map(|j| {
                let col = x.column(j);
                let m = col.sum() / n as f64;
                col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64
            })
            .fold(0.0, f64::max);
        let epsilon = if largest > 0.0 { var_smoothing * largest } else { var_smoothing };
        let epsilon = if epsilon > 0.0 { epsilon } else { f64::MIN_POSITIVE };
        let mut log_prior = [f64::NEG_INFINITY; 2];
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        let mut var = [vec![1.0; d], vec![1.0; d]];
        for c in 0..2u8 {
            let rows: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            if rows.is_empty() {
                continue;
            }
            let m = rows.len() as f64;
            log_prior[c as usize] = (m / n as f64).ln();
            for j in 0..d {
                let mu = rows.iter().map(|&i| x[[i, j]]).sum::<f64>() / m;
                let v = rows.iter().map(|&i| (x[[i, j]] - mu).powi(2)).sum::<f64>() / m;
                mean[c as usize][j] = mu;
                var[c as usize][j] = v + epsilon;
            }
        }
        Self { log_prior, mean, var }
    }

    fn joint(&self, c: usize, x: &[f64]) -> f64 {
        if self.log_prior[c] == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let ll: f64 = x
            .iter()
            .zip(&self.mean[c])
            .zip(&self.var[c])
            .map(|((v, m), s2)| -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m).powi(2) / s2))
            .sum();
        self.log_prior[c] + ll
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        let a = self.joint(0, x);
        let b = self.joint(1, x);
        if b == f64::NEG_INFINITY {
            return 0.0;
        }
        if a == f64::NEG_INFINITY {
            return 1.0;
        }
        1.0 / (1.0 + (a - b).exp())
    }
}
