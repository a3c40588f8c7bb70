//! No-U-Turn Sampler with slice-based state selection, the generalized U-turn
//! criterion, dual-averaging step size adaptation and a diagonal metric
//! estimated over expanding warmup windows.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BayesError;
use crate::seed;

/// Unnormalized log density with gradient.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Returns log density at `theta` and writes its gradient into `grad`.
    /// Non-finite values are handled by the sampler as divergences.
    fn log_density_and_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NutsConfig {
    pub warmup: usize,
    pub draws: usize,
    pub max_tree_depth: usize,
    pub target_accept: f64,
    /// Energy error above which a trajectory is marked divergent.
    pub divergence_threshold: f64,
    pub seed: u64,
    pub chains: usize,
    /// Standard deviation of the per-chain jitter added to the initial point.
    pub init_sd: f64,
}

impl Default for NutsConfig {
    fn default() -> Self {
        Self {
            warmup: 500,
            draws: 1000,
            max_tree_depth: 10,
            target_accept: 0.8,
            divergence_threshold: 1000.0,
            seed: 0,
            chains: 2,
            init_sd: 0.1,
        }
    }
}

impl NutsConfig {
    pub fn validate(&self) -> Result<(), BayesError> {
        let bad = |m: &str| Err(BayesError::InvalidConfig(m.into()));
        if self.draws == 0 || self.chains == 0 || self.max_tree_depth == 0 {
            return bad("draws, chains and max_tree_depth must be positive");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad("target_accept must lie in (0, 1)");
        }
        if !(self.divergence_threshold > 0.0) || !(self.init_sd >= 0.0 && self.init_sd.is_finite()) {
            return bad("divergence_threshold must be positive and init_sd finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub chain: usize,
    /// Divergent transitions after warmup.
    pub divergences: usize,
    pub mean_accept_stat: f64,
    pub step_size: f64,
    /// `tree_depth_histogram[k]` counts sampling iterations that doubled k times.
    pub tree_depth_histogram: Vec<usize>,
    pub inverse_metric: Vec<f64>,
    pub gradient_evaluations: u64,
}

#[derive(Debug, Clone)]
pub struct NutsOutput {
    /// `chains * draws` rows, chain-major.
    pub samples: Array2<f64>,
    pub chains: usize,
    pub draws: usize,
    pub diagnostics: Vec<ChainDiagnostics>,
}

#[derive(Debug, Clone)]
struct Point {
    theta: Vec<f64>,
    r: Vec<f64>,
    grad: Vec<f64>,
    logp: f64,
}

/// One leapfrog step of size `step` with diagonal inverse metric. `grad`
/// must hold the gradient at `theta` on entry and holds the new one on exit.
/// Returns the new log density.
pub fn leapfrog<T: LogDensity + ?Sized>(
    target: &T,
    theta: &mut [f64],
    momentum: &mut [f64],
    grad: &mut [f64],
    step: f64,
    inv_metric: &[f64],
) -> f64 {
    for (r, g) in momentum.iter_mut().zip(grad.iter()) {
        *r += 0.5 * step * g;
    }
    for ((t, r), m) in theta.iter_mut().zip(momentum.iter()).zip(inv_metric) {
        *t += step * m * r;
    }
    let logp = target.log_density_and_grad(theta, grad);
    for (r, g) in momentum.iter_mut().zip(grad.iter()) {
        *r += 0.5 * step * g;
    }
    logp
}

fn kinetic(r: &[f64], inv_metric: &[f64]) -> f64 {
    0.5 * r.iter().zip(inv_metric).map(|(r, m)| r * r * m).sum::<f64>()
}

fn hamiltonian(p: &Point, inv_metric: &[f64]) -> f64 {
    let h = -p.logp + kinetic(&p.r, inv_metric);
    if h.is_nan() {
        f64::INFINITY
    } else {
        h
    }
}

/// Generalized criterion: the summed momentum still points forward at both
/// ends of the trajectory.
fn no_uturn(rho: &[f64], minus: &[f64], plus: &[f64], inv_metric: &[f64]) -> bool {
    let mut a = 0.0;
    let mut b = 0.0;
    for k in 0..rho.len() {
        a += rho[k] * inv_metric[k] * minus[k];
        b += rho[k] * inv_metric[k] * plus[k];
    }
    a > 0.0 && b > 0.0
}

struct Subtree {
    minus: Point,
    plus: Point,
    proposal: Point,
    n_valid: usize,
    keep_going: bool,
    alpha_sum: f64,
    n_alpha: usize,
    rho: Vec<f64>,
    divergent: bool,
}

struct Sampler<'a, T: ?Sized> {
    target: &'a T,
    inv_metric: Vec<f64>,
    threshold: f64,
    max_depth: usize,
    grad_evals: u64,
}

impl<T: LogDensity + ?Sized> Sampler<'_, T> {
    fn evaluate(&mut self, theta: Vec<f64>) -> Point {
        let mut grad = vec![0.0; theta.len()];
        let logp = self.target.log_density_and_grad(&theta, &mut grad);
        self.grad_evals += 1;
        Point {
            r: vec![0.0; theta.len()],
            theta,
            grad,
            logp,
        }
    }

    fn step(&mut self, from: &Point, eps: f64) -> Point {
        let mut p = from.clone();
        p.logp = leapfrog(self.target, &mut p.theta, &mut p.r, &mut p.grad, eps, &self.inv_metric);
        self.grad_evals += 1;
        p
    }

    fn build(&mut self, edge: &Point, log_u: f64, forward: bool, depth: usize, eps: f64, h0: f64, rng: &mut ChaCha8Rng) -> Subtree {
        if depth == 0 {
            let p = self.step(edge, if forward { eps } else { -eps });
            let h = hamiltonian(&p, &self.inv_metric);
            let divergent = !(h - h0 <= self.threshold);
            let alpha = if h.is_finite() { (h0 - h).exp().min(1.0) } else { 0.0 };
            return Subtree {
                minus: p.clone(),
                plus: p.clone(),
                rho: p.r.clone(),
                n_valid: usize::from(log_u <= -h),
                keep_going: !divergent,
                alpha_sum: alpha,
                n_alpha: 1,
                divergent,
                proposal: p,
            };
        }
        let mut first = self.build(edge, log_u, forward, depth - 1, eps, h0, rng);
        if !first.keep_going {
            return first;
        }
        let next_edge = if forward { first.plus.clone() } else { first.minus.clone() };
        let second = self.build(&next_edge, log_u, forward, depth - 1, eps, h0, rng);
        if forward {
            first.plus = second.plus;
        } else {
            first.minus = second.minus;
        }
        let total = first.n_valid + second.n_valid;
        if total > 0 && rng.random::<f64>() < second.n_valid as f64 / total as f64 {
            first.proposal = second.proposal;
        }
        first.n_valid = total;
        first.alpha_sum += second.alpha_sum;
        first.n_alpha += second.n_alpha;
        first.divergent |= second.divergent;
        for (a, b) in first.rho.iter_mut().zip(&second.rho) {
            *a += b;
        }
        first.keep_going =
            second.keep_going && no_uturn(&first.rho, &first.minus.r, &first.plus.r, &self.inv_metric);
        first
    }

    fn draw_momentum(&self, p: &mut Point, rng: &mut ChaCha8Rng) {
        for (r, m) in p.r.iter_mut().zip(&self.inv_metric) {
            *r = rng.sample::<f64, _>(StandardNormal) / m.sqrt();
        }
    }

    /// One NUTS transition. Returns (next point, accept stat, depth, divergent).
    fn transition(&mut self, current: &Point, eps: f64, rng: &mut ChaCha8Rng) -> (Point, f64, usize, bool) {
        let mut start = current.clone();
        self.draw_momentum(&mut start, rng);
        let h0 = hamiltonian(&start, &self.inv_metric);
        let log_u = -h0 + (1.0 - rng.random::<f64>()).ln();
        let mut minus = start.clone();
        let mut plus = start.clone();
        let mut rho = start.r.clone();
        let mut proposal = start;
        let mut n_valid = 1usize;
        let (mut alpha_sum, mut n_alpha) = (0.0, 0usize);
        let mut divergent = false;
        let mut depth = 0;
        let mut keep_going = true;
        while keep_going && depth < self.max_depth {
            let forward = rng.random::<bool>();
            let edge = if forward { plus.clone() } else { minus.clone() };
            let sub = self.build(&edge, log_u, forward, depth, eps, h0, rng);
            if forward {
                plus = sub.plus;
            } else {
                minus = sub.minus;
            }
            if sub.keep_going && rng.random::<f64>() < sub.n_valid as f64 / n_valid as f64 {
                proposal = sub.proposal;
            }
            n_valid += sub.n_valid;
            alpha_sum += sub.alpha_sum;
            n_alpha += sub.n_alpha;
            divergent |= sub.divergent;
            for (a, b) in rho.iter_mut().zip(&sub.rho) {
                *a += b;
            }
            keep_going = sub.keep_going && no_uturn(&rho, &minus.r, &plus.r, &self.inv_metric);
            depth += 1;
        }
        let accept = if n_alpha > 0 { alpha_sum / n_alpha as f64 } else { 0.0 };
        (proposal, accept, depth, divergent)
    }

    /// Doubles or halves the step until one leapfrog step crosses an
    /// acceptance probability of one half.
    fn reasonable_step(&mut self, at: &Point, mut eps: f64, rng: &mut ChaCha8Rng) -> f64 {
        let mut start = at.clone();
        self.draw_momentum(&mut start, rng);
        let h0 = hamiltonian(&start, &self.inv_metric);
        let log_ratio = |s: &mut Self, e: f64| {
            let p = s.step(&start, e);
            let h = hamiltonian(&p, &s.inv_metric);
            if h.is_finite() {
                h0 - h
            } else {
                f64::NEG_INFINITY
            }
        };
        let half = 0.5f64.ln();
        let grow = log_ratio(self, eps) > half;
        for _ in 0..100 {
            let next = if grow { eps * 2.0 } else { eps * 0.5 };
            if !(1e-10..=1e7).contains(&next) {
                break;
            }
            let lr = log_ratio(self, next);
            if grow && !(lr > half) {
                break;
            }
            eps = next;
            if !grow && lr > half {
                break;
            }
        }
        eps
    }
}

struct DualAveraging {
    mu: f64,
    h_bar: f64,
    log_eps_bar: f64,
    count: f64,
    target: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps: f64, target: f64) -> Self {
        Self {
            mu: (10.0 * eps).ln(),
            h_bar: 0.0,
            log_eps_bar: 0.0,
            count: 0.0,
            target,
        }
    }

    fn update(&mut self, accept: f64) -> f64 {
        self.count += 1.0;
        let w = 1.0 / (self.count + Self::T0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - accept);
        let log_eps = self.mu - self.count.sqrt() / Self::GAMMA * self.h_bar;
        let x = self.count.powf(-Self::KAPPA);
        self.log_eps_bar = x * log_eps + (1.0 - x) * self.log_eps_bar;
        log_eps.exp()
    }

    fn final_step(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Iterations (exclusive ends) at which the metric is re-estimated.
fn metric_windows(warmup: usize) -> (usize, Vec<usize>) {
    if warmup < 20 {
        return (warmup, Vec::new());
    }
    let (mut init, mut term, mut base) = (75, 50, 25);
    if init + term + base > warmup {
        init = warmup * 15 / 100;
        term = warmup / 10;
        base = warmup - init - term;
    }
    let stop = warmup - term;
    let mut ends = Vec::new();
    let (mut start, mut size) = (init, base);
    while start < stop {
        let mut end = start + size;
        if end + 2 * size > stop {
            end = stop;
        }
        ends.push(end);
        start = end;
        size *= 2;
    }
    (init, ends)
}

#[derive(Default)]
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn push(&mut self, x: &[f64]) {
        if self.n == 0 {
            self.mean = vec![0.0; x.len()];
            self.m2 = vec![0.0; x.len()];
        }
        self.n += 1;
        for k in 0..x.len() {
            let delta = x[k] - self.mean[k];
            self.mean[k] += delta / self.n as f64;
            self.m2[k] += delta * (x[k] - self.mean[k]);
        }
    }

    /// Sample variance shrunk towards 1e-3.
    fn regularized(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|m2| {
                let var = m2 / (n - 1.0);
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }
}

fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    init: &[f64],
    cfg: &NutsConfig,
    chain: usize,
) -> Result<(Vec<Vec<f64>>, ChainDiagnostics), BayesError> {
    let mut rng = seed::rng(seed::derive_indexed(cfg.seed, "nuts/chain", chain as u64));
    let dim = target.dim();
    let mut sampler = Sampler {
        target,
        inv_metric: vec![1.0; dim],
        threshold: cfg.divergence_threshold,
        max_depth: cfg.max_tree_depth,
        grad_evals: 0,
    };
    let mut current = None;
    for _ in 0..100 {
        let theta: Vec<f64> = init
            .iter()
            .map(|v| v + cfg.init_sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let p = sampler.evaluate(theta);
        if p.logp.is_finite() && p.grad.iter().all(|g| g.is_finite()) {
            current = Some(p);
            break;
        }
    }
    let mut current = current.ok_or(BayesError::InitFailed)?;

    let mut eps = sampler.reasonable_step(&current, 1.0, &mut rng);
    let mut dual = DualAveraging::new(eps, cfg.target_accept);
    let (init_buffer, ends) = metric_windows(cfg.warmup);
    let mut window = Welford::default();
    let mut next_end = 0;
    for m in 0..cfg.warmup {
        let (next, accept, _, _) = sampler.transition(&current, eps, &mut rng);
        current = next;
        eps = dual.update(accept);
        if next_end < ends.len() && m >= init_buffer {
            window.push(&current.theta);
            if m + 1 == ends[next_end] {
                sampler.inv_metric = window.regularized();
                window = Welford::default();
                next_end += 1;
                eps = sampler.reasonable_step(&current, eps, &mut rng);
                dual = DualAveraging::new(eps, cfg.target_accept);
            }
        }
    }
    if cfg.warmup > 0 {
        eps = dual.final_step();
    }

    let mut draws = Vec::with_capacity(cfg.draws);
    let mut histogram = vec![0usize; cfg.max_tree_depth + 1];
    let mut divergences = 0;
    let mut accept_sum = 0.0;
    for _ in 0..cfg.draws {
        let (next, accept, depth, divergent) = sampler.transition(&current, eps, &mut rng);
        current = next;
        histogram[depth] += 1;
        divergences += usize::from(divergent);
        accept_sum += accept;
        draws.push(current.theta.clone());
    }
    let diagnostics = ChainDiagnostics {
        chain,
        divergences,
        mean_accept_stat: accept_sum / cfg.draws as f64,
        step_size: eps,
        tree_depth_histogram: histogram,
        inverse_metric: sampler.inv_metric.clone(),
        gradient_evaluations: sampler.grad_evals,
    };
    Ok((draws, diagnostics))
}

/// Runs `cfg.chains` independent chains from jittered copies of `init`.
/// Fails with `AllDivergent` when more than half of all draws diverged.
pub fn nuts_sample<T: LogDensity + ?Sized>(target: &T, init: &[f64], cfg: &NutsConfig) -> Result<NutsOutput, BayesError> {
    cfg.validate()?;
    let dim = target.dim();
    if dim == 0 || init.len() != dim {
        return Err(BayesError::DimMismatch {
            expected: dim,
            found: init.len(),
        });
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(BayesError::NonFinite);
    }
    let runs: Vec<_> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(target, init, cfg, c))
        .collect::<Result<_, _>>()?;
    let mut samples = Array2::zeros((cfg.chains * cfg.draws, dim));
    let mut diagnostics = Vec::with_capacity(cfg.chains);
    for (c, (draws, diag)) in runs.into_iter().enumerate() {
        for (i, row) in draws.into_iter().enumerate() {
            samples.row_mut(c * cfg.draws + i).assign(&ndarray::Array1::from(row));
        }
        diagnostics.push(diag);
    }
    let total_div: usize = diagnostics.iter().map(|d| d.divergences).sum();
    if 2 * total_div > cfg.chains * cfg.draws {
        return Err(BayesError::AllDivergent {
            divergences: total_div,
            draws: cfg.chains * cfg.draws,
            diagnostics,
        });
    }
    Ok(NutsOutput {
        samples,
        chains: cfg.chains,
        draws: cfg.draws,
        diagnostics,
    })
}
