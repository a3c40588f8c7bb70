//! One-hidden-layer network with five ReLU units and a sigmoid output.
//!
//! Weights are stored flat as `[W1 (5 x d, row-major), b1 (5), W2 (5), b2]`,
//! 5d + 11 numbers. Under a Horseshoe prior the unconstrained vector is
//! `[z, eta]`, twice as long, and weight k equals `z_k * exp(eta_k) * scale`.

use std::borrow::Cow;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use super::nuts::LogDensity;
use super::prior::{log_density_horseshoe, PriorFamily, PriorSpec};
use super::BayesError;

pub const HIDDEN: usize = 5;
const CLAMP: f64 = 1e-12;
/// logit(1 - 1e-12)
const LOGIT_CLAMP: f64 = 27.63102111592755;

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn n_weights(d: usize) -> usize {
    HIDDEN * d + 2 * HIDDEN + 1
}

/// Length of the unconstrained parameter vector.
pub fn dim(d: usize, prior: &PriorSpec) -> usize {
    n_weights(d) * prior.coords_per_param()
}

/// Number of input features implied by a flat weight vector.
pub fn features_of(n_weights: usize) -> Option<usize> {
    let rest = n_weights.checked_sub(2 * HIDDEN + 1)?;
    (rest % HIDDEN == 0).then_some(rest / HIDDEN)
}

/// Network weights from an unconstrained vector.
pub fn effective_weights<'a>(theta: &'a [f64], prior: &PriorSpec) -> Cow<'a, [f64]> {
    match prior.family {
        PriorFamily::Horseshoe => {
            let p = theta.len() / 2;
            Cow::Owned(
                theta[..p]
                    .iter()
                    .zip(&theta[p..])
                    .map(|(z, eta)| z * eta.exp() * prior.scale)
                    .collect(),
            )
        }
        _ => Cow::Borrowed(theta),
    }
}

fn sigmoid_clamped(z: f64) -> (f64, bool) {
    let p = crate::models::sigmoid(z);
    if p < CLAMP {
        (CLAMP, true)
    } else if p > 1.0 - CLAMP {
        (1.0 - CLAMP, true)
    } else {
        (p, false)
    }
}

fn forward_unchecked(w: &[f64], d: usize, x: ArrayView1<'_, f64>) -> f64 {
    let (w1, rest) = w.split_at(HIDDEN * d);
    let (b1, rest) = rest.split_at(HIDDEN);
    let (w2, b2) = rest.split_at(HIDDEN);
    let mut z = b2[0];
    for h in 0..HIDDEN {
        let a = b1[h] + w1[h * d..(h + 1) * d].iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
        z += w2[h] * a.max(0.0);
    }
    sigmoid_clamped(z).0
}

/// Class-1 probability for one row, sigmoid clamped to [1e-12, 1 - 1e-12].
pub fn forward(weights: &[f64], x: &[f64]) -> Result<f64, BayesError> {
    let d = features_of(weights.len()).ok_or(BayesError::DimMismatch {
        expected: n_weights(x.len()),
        found: weights.len(),
    })?;
    if d != x.len() {
        return Err(BayesError::DimMismatch {
            expected: d,
            found: x.len(),
        });
    }
    Ok(forward_unchecked(weights, d, ArrayView1::from(x)))
}

/// Probabilities for every row of `x`.
pub fn forward_batch(weights: &[f64], x: ArrayView2<'_, f64>) -> Vec<f64> {
    let d = x.ncols();
    x.axis_iter(Axis(0)).map(|row| forward_unchecked(weights, d, row)).collect()
}

/// Posterior target for one dataset and prior.
#[derive(Debug, Clone)]
pub struct BnnTarget {
    x: Array2<f64>,
    y: Vec<f64>,
    prior: PriorSpec,
}

impl BnnTarget {
    pub fn new(x: ArrayView2<'_, f64>, labels: &[u8], prior: PriorSpec) -> Result<Self, BayesError> {
        if x.nrows() != labels.len() {
            return Err(BayesError::DimMismatch {
                expected: x.nrows(),
                found: labels.len(),
            });
        }
        if !prior.is_valid() {
            return Err(BayesError::InvalidConfig(format!("prior scale must be positive: {prior:?}")));
        }
        Ok(Self {
            x: x.as_standard_layout().into_owned(),
            y: labels.iter().map(|&v| v as f64).collect(),
            prior,
        })
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// Log-likelihood plus log-prior; fills `grad` when given.
    pub fn evaluate(&self, theta: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let d = self.x.ncols();
        let p_len = n_weights(d);
        let w = effective_weights(theta, &self.prior);
        let (w1, rest) = w.split_at(HIDDEN * d);
        let (b1, rest) = rest.split_at(HIDDEN);
        let (w2, b2) = rest.split_at(HIDDEN);
        let rows = self.x.as_slice().expect("standard layout");
        let want_grad = grad.is_some();
        let mut gw = vec![0.0; if want_grad { p_len } else { 0 }];
        let mut ll = 0.0;
        let mut pre = [0.0; HIDDEN];
        for (i, &y) in self.y.iter().enumerate() {
            let row = &rows[i * d..(i + 1) * d];
            let mut z = b2[0];
            for h in 0..HIDDEN {
                let a = b1[h] + w1[h * d..(h + 1) * d].iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
                pre[h] = a;
                if a > 0.0 {
                    z += w2[h] * a;
                }
            }
            // clamping the logit is the same as clamping p to [1e-12, 1 - 1e-12];
            // softplus keeps log(1 - p) accurate when p is near 1
            let zc = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
            ll -= y * softplus(-zc) + (1.0 - y) * softplus(zc);
            if !want_grad || zc != z {
                continue;
            }
            let delta = y - crate::models::sigmoid(z);
            gw[p_len - 1] += delta;
            for h in 0..HIDDEN {
                // ReLU subgradient at 0 is 0
                if pre[h] <= 0.0 {
                    continue;
                }
                gw[HIDDEN * d + HIDDEN + h] += delta * pre[h];
                let dh = delta * w2[h];
                gw[HIDDEN * d + h] += dh;
                for (g, xj) in gw[h * d..(h + 1) * d].iter_mut().zip(row) {
                    *g += dh * xj;
                }
            }
        }

        let mut lp = 0.0;
        match self.prior.family {
            PriorFamily::Horseshoe => {
                let (z, eta) = theta.split_at(p_len);
                for k in 0..p_len {
                    let (v, dz, deta) = log_density_horseshoe(z[k], eta[k]);
                    lp += v;
                    if let Some(g) = grad.as_deref_mut() {
                        // chain rule through w = z * exp(eta) * scale
                        g[k] = gw[k] * eta[k].exp() * self.prior.scale + dz;
                        g[p_len + k] = gw[k] * w[k] + deta;
                    }
                }
            }
            _ => {
                for (k, &wk) in w.iter().enumerate() {
                    let (v, dv) = self.prior.log_density(wk);
                    lp += v;
                    if !gw.is_empty() {
                        gw[k] += dv;
                    }
                }
                if let Some(g) = grad {
                    g.copy_from_slice(&gw);
                }
            }
        }
        ll + lp
    }

    pub fn log_joint(&self, theta: &[f64]) -> Result<f64, BayesError> {
        self.check_dim(theta)?;
        let v = self.evaluate(theta, None);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(BayesError::NonFinite)
        }
    }

    pub fn grad_log_joint(&self, theta: &[f64]) -> Result<Vec<f64>, BayesError> {
        self.check_dim(theta)?;
        let mut g = vec![0.0; theta.len()];
        let v = self.evaluate(theta, Some(&mut g));
        if v.is_finite() && g.iter().all(|x| x.is_finite()) {
            Ok(g)
        } else {
            Err(BayesError::NonFinite)
        }
    }

    fn check_dim(&self, theta: &[f64]) -> Result<(), BayesError> {
        let expected = dim(self.x.ncols(), &self.prior);
        if theta.len() != expected {
            return Err(BayesError::DimMismatch {
                expected,
                found: theta.len(),
            });
        }
        Ok(())
    }
}

impl LogDensity for BnnTarget {
    fn dim(&self) -> usize {
        dim(self.x.ncols(), &self.prior)
    }

    fn log_density_and_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        self.evaluate(theta, Some(grad))
    }
}
