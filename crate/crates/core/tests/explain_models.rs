use ndarray::Array2;
use rand::Rng;

use uqtab_core::data::{ColumnEncoding, ColumnKind};
use uqtab_core::explain::{background, explain_rows, render_shap, ShapSummary};
use uqtab_core::models::{fit, FeatureSubset};
use uqtab_core::{ClassifierFamily, EncodedMatrix, HyperParams, LabelVector};

fn dataset(n: usize, seed: u64) -> (EncodedMatrix, LabelVector) {
    let mut rng = uqtab_core::seed::rng(seed);
    let values = Array2::from_shape_fn((n, 4), |_| rng.random_range(-1.0..1.0));
    let y: Vec<u8> = values
        .rows()
        .into_iter()
        .map(|r| u8::from(2.0 * r[0] - r[1] + 0.3 * rng.random_range(-1.0..1.0) > 0.0))
        .collect();
    let d = values.ncols();
    let x = EncodedMatrix {
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
    };
    (x, LabelVector::new(y).unwrap())
}

#[test]
fn trained_classifiers_satisfy_efficiency_and_rank_the_signal_first() {
    let (x, y) = dataset(160, 1);
    let bg = background(x.values.view(), 40, 2);
    let grids = [
        HyperParams::Logistic { l2_lambda: 0.01 },
        HyperParams::RandomForest {
            n_trees: 60,
            max_depth: Some(6),
            feature_subset: FeatureSubset::Sqrt,
            bootstrap: true,
        },
    ];
    for hp in grids {
        let model = fit(&hp, &x, &y, 3).unwrap();
        let rows = x.values.slice(ndarray::s![..25, ..]);
        let explanations = explain_rows(&model, rows, bg.view()).unwrap();
        for e in &explanations {
            assert!(e.efficiency_gap() < 1e-9, "{:?}", hp.family());
            assert!((e.fx - model.proba_row(e.instance.as_slice())).abs() < 1e-12);
        }
        let summary = ShapSummary::new(x.feature_names.clone(), explanations).unwrap();
        assert_eq!(summary.ranking[0], "x0", "{:?}", hp.family());
        if hp.family() == ClassifierFamily::Logistic {
            assert_eq!(summary.ranking[1], "x1");
        }
    }
}

#[test]
fn rendered_charts_are_well_formed_svg() {
    let (x, y) = dataset(80, 4);
    let model = fit(&HyperParams::Logistic { l2_lambda: 0.1 }, &x, &y, 0).unwrap();
    let bg = background(x.values.view(), 20, 5);
    let explanations = explain_rows(&model, x.values.slice(ndarray::s![..10, ..]), bg.view()).unwrap();
    let summary = ShapSummary::new(x.feature_names.clone(), explanations).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = render_shap(&summary, dir.path(), 6, 0).unwrap();
    for path in [files.bar, files.beeswarm, files.decision, files.waterfall] {
        let text = std::fs::read_to_string(&path).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg", "{}", path.display());
    }
}
