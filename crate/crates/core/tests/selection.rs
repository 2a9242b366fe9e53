mod common;

use std::collections::HashSet;

use hazardscope::dataset::{make_labeled, MissingHazardPolicy};
use hazardscope::selection::{
    base_config, cross_validate, stratified_folds, stratified_split, train_count, CvSpec,
    HyperValue, ParamGrid, SplitSpec, TrainSplit,
};
use hazardscope::synth::{generate_county, LabelLaw, ScenarioSpec};
use hazardscope::{Error, ModelKind, RiskLabel};

use RiskLabel::{High, Low};

fn ten_rows() -> hazardscope::LabeledDataset {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (10 - i) as f64]).collect();
    common::labeled(&rows, &common::labels_from(&[0, 1, 0, 0, 1, 0, 1, 0, 1, 0]))
}

fn spec(fraction: f64, seed: u64) -> SplitSpec {
    SplitSpec {
        train_fraction: fraction,
        stratified: true,
        seed,
    }
}

#[test]
fn per_class_rounding() {
    let data = ten_rows();
    assert_eq!(data.class_counts(), [6, 4]);
    let (train, test) = stratified_split(&data, &spec(0.7, 1)).unwrap();
    // round(0.7 * 6) = 4, round(0.7 * 4) = round(2.8) = 3
    assert_eq!(train.0.class_counts(), [4, 3]);
    assert_eq!(test.0.class_counts(), [2, 1]);
    assert_eq!(train_count(5, 0.5), 2);
    assert_eq!(train_count(7, 0.5), 4);
}

#[test]
fn split_partitions_and_is_deterministic() {
    let data = common::random_dataset(3, 101, 3);
    let (a_train, a_test) = stratified_split(&data, &spec(0.7, 9)).unwrap();
    let (b_train, b_test) = stratified_split(&data, &spec(0.7, 9)).unwrap();
    assert_eq!(a_train, b_train);
    assert_eq!(a_test, b_test);

    let train: HashSet<&String> = a_train.0.tract_ids.iter().collect();
    let test: HashSet<&String> = a_test.0.tract_ids.iter().collect();
    assert!(train.is_disjoint(&test));
    assert_eq!(train.len() + test.len(), data.n_rows());

    let (c_train, _) = stratified_split(&data, &spec(0.7, 10)).unwrap();
    assert_ne!(a_train.0.tract_ids, c_train.0.tract_ids);

    let plain = SplitSpec {
        stratified: false,
        ..spec(0.7, 9)
    };
    let (p_train, p_test) = stratified_split(&data, &plain).unwrap();
    assert_eq!(p_train.0.n_rows(), train_count(101, 0.7));
    assert_eq!(p_train.0.n_rows() + p_test.0.n_rows(), 101);
}

#[test]
fn split_errors() {
    let all_high = common::labeled(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]], &[High, High, High]);
    assert!(matches!(
        stratified_split(&all_high, &spec(0.7, 0)),
        Err(Error::DegenerateLabels { .. })
    ));
    let lonely = common::labeled(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]], &[High, Low, Low]);
    assert!(matches!(
        stratified_split(&lonely, &spec(0.7, 0)),
        Err(Error::ClassTooSmall { .. })
    ));
    assert!(matches!(
        stratified_split(&ten_rows(), &spec(1.0, 0)),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn folds_partition_with_balanced_classes() {
    let data = common::random_dataset(21, 203, 3);
    let k = 10;
    let fold_of = stratified_folds(&data, k, 4).unwrap();
    assert_eq!(fold_of.len(), data.n_rows());
    assert!(fold_of.iter().all(|&f| f < k));
    let totals = data.class_counts();
    for f in 0..k {
        let mut counts = [0usize; 2];
        for (i, _) in fold_of.iter().enumerate().filter(|(_, g)| **g == f) {
            counts[data.labels[i].index()] += 1;
        }
        for c in 0..2 {
            let expected = totals[c] as f64 / k as f64;
            assert!((counts[c] as f64 - expected).abs() < 1.0, "fold {f} class {c}");
        }
    }
    assert_eq!(fold_of, stratified_folds(&data, k, 4).unwrap());
    assert!(matches!(
        stratified_folds(&ten_rows(), 11, 0),
        Err(Error::TooFewSamples { n: 10, k: 11 })
    ));
}

fn forest_grid(depths: &[HyperValue]) -> ParamGrid {
    ParamGrid::default()
        .with("n_trees", [HyperValue::num(10.0)])
        .with("max_depth", depths.iter().copied())
}

#[test]
fn singleton_grid_reports_every_fold() {
    let data = common::random_dataset(5, 80, 4);
    let mut cv = CvSpec::new(forest_grid(&[HyperValue::num(3.0)]));
    cv.k = 5;
    let result = cross_validate(&TrainSplit(data), &base_config(ModelKind::Forest), &cv, 2).unwrap();
    assert_eq!(result.best_index, 0);
    assert_eq!(result.table.len(), 5);
    let mut csv = Vec::new();
    result.write_table_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 6);
}

#[test]
fn duplicate_points_tie_and_pick_the_first() {
    let data = common::random_dataset(6, 80, 4);
    let mut cv = CvSpec::new(forest_grid(&[HyperValue::num(4.0), HyperValue::num(4.0)]));
    cv.k = 4;
    let result = cross_validate(&TrainSplit(data), &base_config(ModelKind::Forest), &cv, 2).unwrap();
    assert_eq!(result.mean_scores[0], result.mean_scores[1]);
    assert_eq!(result.best_index, 0);
}

#[test]
fn interaction_rule_selects_deeper_trees() {
    let mut s = ScenarioSpec::new("xor", 400, vec![0, 1], 12);
    s.n_features = 4;
    s.law = LabelLaw::TreeRule;
    let county = generate_county(&s).unwrap();
    let data = make_labeled(&county, "h", MissingHazardPolicy::Drop).unwrap();
    let (train, _) = stratified_split(&data, &spec(0.7, 1)).unwrap();
    let mut cv = CvSpec::new(forest_grid(&[HyperValue::num(1.0), HyperValue::num(8.0)]));
    cv.k = 5;
    let result = cross_validate(&train, &base_config(ModelKind::Forest), &cv, 3).unwrap();
    assert_eq!(result.best_point["max_depth"], HyperValue::num(8.0));
    assert!(result.mean_scores[1].unwrap() > result.mean_scores[0].unwrap());
}

#[test]
fn gbt_grids_work_too() {
    let data = common::random_dataset(7, 90, 3);
    let grid = ParamGrid::default()
        .with("rounds", [HyperValue::num(5.0)])
        .with("learning_rate", [HyperValue::num(0.1), HyperValue::num(0.3)]);
    let mut cv = CvSpec::new(grid);
    cv.k = 3;
    let result = cross_validate(&TrainSplit(data), &base_config(ModelKind::Gbt), &cv, 1).unwrap();
    assert_eq!(result.table.len(), 6);
    assert_eq!(result.best_config.kind(), ModelKind::Gbt);

    let bad = ParamGrid::default().with("leaves", [HyperValue::num(5.0)]);
    let err = cross_validate(
        &TrainSplit(common::random_dataset(7, 90, 3)),
        &base_config(ModelKind::Gbt),
        &CvSpec::new(bad),
        1,
    )
    .unwrap_err();
    assert!(matches!(err, Error::UnknownHyperparameter { .. }));
}
