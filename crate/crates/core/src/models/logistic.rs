use ndarray::{Array1, ArrayView2};

use super::sigmoid;

const MAX_ITERATIONS: usize = 5000;
const GRADIENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// Mean log-loss plus (lambda / 2) * |w|^2; the intercept is not penalized.
fn objective(x: ArrayView2<'_, f64>, y: &[f64], lambda: f64, theta: &Array1<f64>) -> (f64, Array1<f64>) {
    let d = x.ncols();
    let n = x.nrows() as f64;
    let w = theta.slice(ndarray::s![..d]);
    let z = x.dot(&w) + theta[d];
    let mut loss = 0.0;
    let mut resid = Array1::zeros(x.nrows());
    for i in 0..x.nrows() {
        // log(1 + e^z) - y z, computed without overflow
        let zi = z[i];
        loss += zi.max(0.0) + (-zi.abs()).exp().ln_1p() - y[i] * zi;
        resid[i] = sigmoid(zi) - y[i];
    }
    let mut grad = Array1::zeros(d + 1);
    grad.slice_mut(ndarray::s![..d]).assign(&(x.t().dot(&resid) / n + &w * lambda));
    grad[d] = resid.sum() / n;
    (loss / n + 0.5 * lambda * w.dot(&w), grad)
}

impl Logistic {
    /// Barzilai-Borwein steps safeguarded by Armijo backtracking. Returns the
    /// model, whether the gradient tolerance was met and the iteration count.
    pub(crate) fn fit(x: ArrayView2<'_, f64>, labels: &[u8], lambda: f64) -> (Self, bool, usize) {
        let d = x.ncols();
        let y: Vec<f64> = labels.iter().map(|&v| v as f64).collect();
        let mut theta = Array1::<f64>::zeros(d + 1);
        let (mut f, mut g) = objective(x, &y, lambda, &theta);
        let mut step = 1.0;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < MAX_ITERATIONS {
            let gnorm2 = g.dot(&g);
            if gnorm2.sqrt() < GRADIENT_TOL {
                converged = true;
                break;
            }
            iterations += 1;
            let mut t = step;
            let (next, fn_, gn) = loop {
                let cand = &theta - &(&g * t);
                let (fc, gc) = objective(x, &y, lambda, &cand);
                if fc <= f - 1e-4 * t * gnorm2 || t < 1e-20 {
                    break (cand, fc, gc);
                }
                t *= 0.5;
            };
            let s = &next - &theta;
            let dg = &gn - &g;
            let sy = s.dot(&dg);
            step = if sy > 0.0 { (s.dot(&s) / sy).clamp(1e-10, 1e10) } else { 1.0 };
            if fn_ >= f && t < 1e-20 {
                // no representable descent left
                theta = next;
                g = gn;
                converged = g.dot(&g).sqrt() < GRADIENT_TOL;
                break;
            }
            theta = next;
            f = fn_;
            g = gn;
        }
        if !converged && g.dot(&g).sqrt() < GRADIENT_TOL {
            converged = true;
        }
        let model = Self {
            weights: theta.slice(ndarray::s![..d]).to_vec(),
            intercept: theta[d],
        };
        (model, converged, iterations)
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}
