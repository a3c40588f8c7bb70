use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::sigmoid;
use crate::seed;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    /// hidden x d
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array1<f64>,
    b2: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step<'a>(&mut self, lr: f64, params: impl Iterator<Item = (&'a mut f64, f64)>) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (k, (p, g)) in params.enumerate() {
            self.m[k] = BETA1 * self.m[k] + (1.0 - BETA1) * g;
            self.v[k] = BETA2 * self.v[k] + (1.0 - BETA2) * g * g;
            *p -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + EPS);
        }
    }
}

impl Mlp {
    /// One ReLU hidden layer and a sigmoid output trained on mean
    /// cross-entropy with full-batch Adam for a fixed number of epochs.
    pub(crate) fn fit(x: ArrayView2<'_, f64>, labels: &[u8], hidden: usize, lr: f64, epochs: usize, seed: u64) -> Self {
        let (n, d) = x.dim();
        let mut rng = seed::rng(seed::derive(seed, "mlp-init"));
        let s1 = (2.0 / d.max(1) as f64).sqrt();
        let s2 = (1.0 / hidden as f64).sqrt();
        let mut net = Self {
            w1: Array2::from_shape_fn((hidden, d), |_| s1 * rng.sample::<f64, _>(StandardNormal)),
            b1: Array1::zeros(hidden),
            w2: Array1::from_shape_fn(hidden, |_| s2 * rng.sample::<f64, _>(StandardNormal)),
            b2: 0.0,
        };
        let y = Array1::from_iter(labels.iter().map(|&v| v as f64));
        let mut adam = Adam::new(net.parameter_count());
        for _ in 0..epochs {
            let pre = x.dot(&net.w1.t()) + &net.b1;
            let act = pre.mapv(|v| v.max(0.0));
            let out = act.dot(&net.w2) + net.b2;
            let delta_out = (out.mapv(sigmoid) - &y) / n as f64;
            let g_w2 = act.t().dot(&delta_out);
            let g_b2 = delta_out.sum();
            let mut delta_hidden = delta_out.insert_axis(Axis(1)).dot(&net.w2.view().insert_axis(Axis(0)));
            delta_hidden.zip_mut_with(&pre, |g, &z| {
                if z <= 0.0 {
                    *g = 0.0
                }
            });
            let g_w1 = delta_hidden.t().dot(&x);
            let g_b1 = delta_hidden.sum_axis(Axis(0));
            let grads = g_w1.iter().chain(g_b1.iter()).chain(g_w2.iter()).copied().chain(std::iter::once(g_b2));
            let params = net
                .w1
                .iter_mut()
                .chain(net.b1.iter_mut())
                .chain(net.w2.iter_mut())
                .chain(std::iter::once(&mut net.b2));
            adam.step(lr, params.zip(grads.collect::<Vec<_>>()));
        }
        net
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        let mut z = self.b2;
        for (h, row) in self.w1.rows().into_iter().enumerate() {
            let a = self.b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            z += self.w2[h] * a.max(0.0);
        }
        sigmoid(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn learns_xor() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let labels = [0, 1, 1, 0];
        let m = Mlp::fit(x.view(), &labels, 16, 0.05, 2000, 7);
        for (row, &l) in x.rows().into_iter().zip(&labels) {
            let p = m.proba(row.as_slice().unwrap());
            assert_eq!(u8::from(p > 0.5), l, "p = {p}");
        }
    }
}
