use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

use uqtab_core::bayes::{evaluate_bnn, fit_bnn, posterior_predict, uncertainty, NutsConfig, PosteriorSampleSet, PriorSpec, PredictiveDraws};
use uqtab_core::data::{ColumnEncoding, ColumnKind};
use uqtab_core::{EncodedMatrix, LabelVector};

fn matrix(values: Array2<f64>) -> EncodedMatrix {
    let d = values.ncols();
    EncodedMatrix {
        values,
        feature_names: (0..d).map(|j| format!("x{j}")).collect(),
        encoding: (0..d)
            .map(|j| ColumnEncoding {
                name: format!("x{j}"),
                kind: ColumnKind::Numeric,
                levels: vec![],
            })
            .collect(),
        scaler: None,
    }
}

/// Label is the sign of the first column; the second is noise.
fn toy(n: usize, seed: u64) -> (EncodedMatrix, LabelVector) {
    let mut rng = uqtab_core::seed::rng(seed);
    let values = Array2::from_shape_fn((n, 2), |_| rng.random_range(-2.0..2.0));
    let y: Vec<u8> = values.column(0).iter().map(|v| u8::from(*v > 0.0)).collect();
    (matrix(values), LabelVector::new(y).unwrap())
}

fn small_nuts(seed: u64) -> NutsConfig {
    NutsConfig {
        warmup: 150,
        draws: 150,
        max_tree_depth: 6,
        seed,
        ..Default::default()
    }
}

#[test]
fn every_shipped_prior_fits_and_decomposes() {
    let (x, y) = toy(60, 1);
    let (xt, yt) = toy(40, 2);
    for prior in PriorSpec::shipped() {
        let samples = fit_bnn(&x, &y, prior, &small_nuts(3)).unwrap();
        assert_eq!(samples.n_draws(), 300);
        let draws = posterior_predict(&samples, &xt).unwrap();
        for u in uncertainty(&draws).unwrap() {
            assert!((u.epistemic + u.aleatoric - u.mean * (1.0 - u.mean)).abs() < 1e-12);
        }
        let m = evaluate_bnn(&samples, &xt, &yt).unwrap();
        assert!(m.accuracy >= 0.85, "{}: {}", prior.label(), m.accuracy);
    }
}

#[test]
fn saved_posterior_predicts_identically() {
    let (x, y) = toy(50, 4);
    let samples = fit_bnn(&x, &y, PriorSpec::parse("normal:0:10").unwrap(), &small_nuts(5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    samples.save(dir.path(), "posterior_normal_0_10_reduced").unwrap();
    let back = PosteriorSampleSet::load(dir.path(), "posterior_normal_0_10_reduced").unwrap();
    let a = posterior_predict(&samples, &x).unwrap();
    let b = posterior_predict(&back, &x).unwrap();
    assert_eq!(a, b);
}

#[test]
fn same_seed_same_posterior() {
    let (x, y) = toy(40, 6);
    let prior = PriorSpec::parse("horseshoe:1").unwrap();
    let a = fit_bnn(&x, &y, prior, &small_nuts(7)).unwrap();
    let b = fit_bnn(&x, &y, prior, &small_nuts(7)).unwrap();
    assert_eq!(a.samples, b.samples);
}

proptest! {
    #[test]
    fn decomposition_is_the_bernoulli_variance(probs in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 2..30)) {
        let s = probs.len();
        let draws = PredictiveDraws { probs: Array2::from_shape_fn((s, 3), |(i, j)| probs[i][j]) };
        for u in uncertainty(&draws).unwrap() {
            prop_assert!(u.epistemic >= 0.0 && u.aleatoric >= 0.0);
            prop_assert!((u.epistemic + u.aleatoric - u.mean * (1.0 - u.mean)).abs() < 1e-12);
        }
    }
}
