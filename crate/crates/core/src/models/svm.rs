use ndarray::{Array2, ArrayView2};

use super::{sigmoid, Kernel};

const TOLERANCE: f64 = 1e-3;
const MAX_PASSES: usize = 10_000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Svm {
    kernel: Kernel,
    gamma: f64,
    /// Support vectors with their signed dual weights alpha_i * y_i.
    support: Array2<f64>,
    coef: Vec<f64>,
    /// Decision value is sum coef_i K(sv_i, x) - rho.
    rho: f64,
    /// Largest KKT violation over all training points at exit.
    pub kkt_violation: f64,
}

fn kernel_value(kernel: Kernel, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    match kernel {
        Kernel::Linear => a.iter().zip(b).map(|(u, v)| u * v).sum(),
        Kernel::Rbf => (-gamma * a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>()).exp(),
    }
}

impl Svm {
    /// SMO on the C-SVC dual with second-order working-set selection. One pass
    /// is n pair updates; the run stops after `MAX_PASSES` passes.
    pub(crate) fn fit(x: ArrayView2<'_, f64>, labels: &[u8], c: f64, kernel: Kernel, gamma: f64) -> (Self, bool, usize) {
        let n = labels.len();
        let y: Vec<f64> = labels.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
        let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
        let k = Array2::from_shape_fn((n, n), |(i, j)| kernel_value(kernel, gamma, &rows[i], &rows[j]));
        let mut alpha = vec![0.0; n];
        // gradient of 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij
        let mut grad = vec![-1.0; n];
        let max_iter = MAX_PASSES.saturating_mul(n.max(1));
        let mut iterations = 0;
        let mut converged = false;
        let is_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
        let is_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
        while iterations < max_iter {
            let mut gmax = f64::NEG_INFINITY;
            let mut i_sel = usize::MAX;
            for t in 0..n {
                if is_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                    gmax = -y[t] * grad[t];
                    i_sel = t;
                }
            }
            let mut gmin = f64::INFINITY;
            let mut j_sel = usize::MAX;
            let mut best_obj = f64::INFINITY;
            for t in 0..n {
                if !is_low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * grad[t];
                gmin = gmin.min(v);
                if i_sel == usize::MAX {
                    continue;
                }
                let b = gmax - v;
                if b > 0.0 {
                    let a = k[[i_sel, i_sel]] + k[[t, t]] - 2.0 * k[[i_sel, t]];
                    let obj = -(b * b) / a.max(TAU);
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = t;
                    }
                }
            }
            if gmax - gmin < TOLERANCE || j_sel == usize::MAX {
                converged = true;
                break;
            }
            iterations += 1;
            let (i, j) = (i_sel, j_sel);
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let quad = (k[[i, i]] + k[[j, j]] - 2.0 * k[[i, j]]).max(TAU);
            if y[i] != y[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..n {
                grad[t] += y[t] * (y[i] * k[[t, i]] * di + y[j] * k[[t, j]] * dj);
            }
        }
        let rho = Self::rho(&alpha, &grad, &y, c);
        let support_idx: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0.0).collect();
        let support = Array2::from_shape_fn((support_idx.len(), x.ncols()), |(r, j)| x[[support_idx[r], j]]);
        let coef: Vec<f64> = support_idx.iter().map(|&i| alpha[i] * y[i]).collect();
        let mut model = Self {
            kernel,
            gamma,
            support,
            coef,
            rho,
            kkt_violation: 0.0,
        };
        model.kkt_violation = (0..n)
            .map(|t| {
                let margin = y[t] * model.decision(&rows[t]);
                if alpha[t] <= 0.0 {
                    (1.0 - margin).max(0.0)
                } else if alpha[t] >= c {
                    (margin - 1.0).max(0.0)
                } else {
                    (margin - 1.0).abs()
                }
            })
            .fold(0.0, f64::max);
        (model, converged, iterations)
    }

    fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum_free, mut n_free) = (0.0, 0usize);
        for t in 0..alpha.len() {
            let yg = y[t] * grad[t];
            if alpha[t] >= c {
                if y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if alpha[t] <= 0.0 {
                if y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        if n_free > 0 {
            sum_free / n_free as f64
        } else {
            0.5 * (ub + lb)
        }
    }

    pub fn n_support(&self) -> usize {
        self.coef.len()
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .rows()
            .into_iter()
            .zip(&self.coef)
            .map(|(sv, w)| w * kernel_value(self.kernel, self.gamma, sv.as_slice().unwrap(), x))
            .sum::<f64>()
            - self.rho
    }

    /// Logistic link on the decision value.
    pub fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}
