use std::path::PathBuf;

use uqtab_core::data::{descriptive_stats, encode, load_csv, standardize, stratified_split};
use uqtab_core::FeatureSchema;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load() -> (uqtab_core::DatasetTable, FeatureSchema) {
    let schema = FeatureSchema::from_path(data("thyroid_schema.json")).unwrap();
    let table = load_csv(data("thyroid_surrogate.csv"), &schema).unwrap();
    (table, schema)
}

#[test]
fn age_summary_and_class_split() {
    let (table, _) = load();
    let stats = descriptive_stats(&table).unwrap();
    assert_eq!(stats.n, 383);
    let age = stats.numeric("Age").unwrap();
    assert_eq!((age.min, age.max), (15.0, 82.0));
    assert_eq!(format!("{:.3}", age.mean), "40.867");
    assert_eq!(format!("{:.3}", age.std_dev), "15.134");
    assert_eq!((stats.target.positive, stats.target.negative), (108, 275));
    let m1 = stats.level("M", "M1").unwrap();
    assert_eq!((m1.positive, m1.negative), (18, 0));
}

#[test]
fn level_percentages_are_of_the_whole_cohort() {
    let (table, _) = load();
    let stats = descriptive_stats(&table).unwrap();
    let male = stats.level("Gender", "M").unwrap();
    assert!((male.positive_pct - 100.0 * 42.0 / 383.0).abs() < 1e-12);
    for column in &stats.categorical {
        let total: usize = column.levels.iter().map(|l| l.positive + l.negative).sum();
        assert_eq!(total, 383, "{}", column.column);
    }
}

#[test]
fn split_holds_out_77_rows_and_scaler_sees_train_only() {
    let (table, schema) = load();
    let (x, y) = encode(&table, &schema).unwrap();
    assert_eq!(x.n_cols(), 16);
    let split = stratified_split(&y, 0.8, 42).unwrap();
    assert_eq!(split.test_idx.len(), 77);
    assert_eq!(y.select(&split.test_idx).class_counts(), [55, 22]);

    let train = x.select_rows(&split.train_idx);
    let test = x.select_rows(&split.test_idx);
    let (scaled, others) = standardize(&train, &[&test]);
    for j in 0..scaled.n_cols() {
        assert!(scaled.values.column(j).mean().unwrap().abs() < 1e-12);
    }
    let scaler = scaled.scaler.as_ref().unwrap();
    let back = scaler.inverse(&others[0].values);
    assert!((&back - &test.values).iter().all(|v| v.abs() < 1e-9));
}
