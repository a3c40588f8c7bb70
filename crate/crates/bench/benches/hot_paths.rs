use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ndarray::Array2;
use uqtab_bench::synthetic;
use uqtab_core::bayes::{net, BnnTarget, PriorSpec};
use uqtab_core::explain::{exact_shap, FnModel};
use uqtab_core::models::{fit, FeatureSubset, Kernel};
use uqtab_core::resample::{smote, SmoteConfig};
use uqtab_core::HyperParams;

fn gradient(c: &mut Criterion) {
    for d in [7, 16] {
        let (x, y) = synthetic(440, d);
        for prior in [PriorSpec::shipped()[1], PriorSpec::shipped()[5]] {
            let target = BnnTarget::new(x.values.view(), y.as_slice(), prior).unwrap();
            let theta: Vec<f64> = (0..net::dim(d, &prior)).map(|k| ((k * 13) as f64 * 0.07).sin() * 0.3).collect();
            let mut grad = vec![0.0; theta.len()];
            c.bench_function(&format!("log_joint_and_grad/d{d}/{}", prior.key()), |b| {
                b.iter(|| black_box(target.evaluate(black_box(&theta), Some(&mut grad))))
            });
        }
    }
}

fn shapley(c: &mut Criterion) {
    let w = [0.4, -1.1, 0.8, 0.05, -0.3, 1.7, -0.9];
    let model = FnModel {
        n_features: 7,
        f: move |x: &[f64]| 1.0 / (1.0 + (-x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()).exp()),
    };
    let bg = Array2::from_shape_fn((100, 7), |(i, j)| ((i * 7 + j) as f64 * 0.37).sin());
    let x = [0.2, -0.4, 1.0, 0.0, 0.6, -1.2, 0.3];
    c.bench_function("exact_shap/d7/b100", |b| b.iter(|| exact_shap(&model, black_box(&x), bg.view()).unwrap()));
}

fn training(c: &mut Criterion) {
    let (x, y) = synthetic(306, 16);
    let forest = HyperParams::RandomForest {
        n_trees: 100,
        max_depth: None,
        feature_subset: FeatureSubset::Sqrt,
        bootstrap: true,
    };
    c.bench_function("fit/random_forest/100_trees", |b| b.iter(|| fit(&forest, &x, &y, 7).unwrap()));
    let svm = HyperParams::Svm {
        c: 1.0,
        kernel: Kernel::Rbf,
        gamma: None,
    };
    c.bench_function("fit/svm_rbf", |b| b.iter(|| fit(&svm, &x, &y, 7).unwrap()));
    let cfg = SmoteConfig::default();
    c.bench_function("smote/306x16", |b| b.iter(|| smote(&x, &y, &cfg).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = gradient, shapley, training
}
criterion_main!(benches);
