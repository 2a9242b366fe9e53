mod common;

use hazardscope::cart::{
    best_split, gini_impurity, grow_tree, node_importances, ClassDistribution, ImportanceFormula,
};
use hazardscope::dataset::Matrix;
use hazardscope::rng;
use hazardscope::{DecisionTree, Error, RiskLabel, TreeNode, TreeParams};
use proptest::prelude::*;

use RiskLabel::{High, Low};

fn gini(low: usize, high: usize) -> f64 {
    gini_impurity(&ClassDistribution::new(low, high)).unwrap()
}

fn one_feature(values: &[f64]) -> Matrix {
    Matrix::from_rows(&values.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap()
}

#[test]
fn gini_examples() {
    assert_eq!(gini(5, 5), 0.5);
    assert_eq!(gini(7, 0), 0.0);
    assert!((gini(1, 3) - 0.375).abs() < 1e-12);
    assert!(matches!(
        gini_impurity(&ClassDistribution::new(0, 0)),
        Err(Error::EmptyDistribution)
    ));
}

#[test]
fn best_split_examples() {
    let x = one_feature(&[1.0, 2.0, 3.0, 4.0]);
    let y = [Low, Low, High, High];
    let s = best_split(&x, &y, &[0, 1, 2, 3], &[0], 1).unwrap();
    assert_eq!(s.feature, 0);
    assert_eq!(s.threshold, 2.5);
    assert!((s.gain - 0.5).abs() < 1e-12);

    let flat = one_feature(&[3.0, 3.0, 3.0, 3.0]);
    assert!(best_split(&flat, &y, &[0, 1, 2, 3], &[0], 1).is_none());

    let twin = Matrix::from_rows(&[
        vec![1.0, 10.0],
        vec![2.0, 20.0],
        vec![3.0, 30.0],
        vec![4.0, 40.0],
    ])
    .unwrap();
    let s = best_split(&twin, &y, &[0, 1, 2, 3], &[1, 0], 1).unwrap();
    assert_eq!(s.feature, 0);
}

#[test]
fn grow_tree_examples() {
    let x = one_feature(&[1.0, 2.0, 3.0]);
    let pure = grow_tree(&x, &[High, High, High], vec![0, 1, 2], &TreeParams::default(), &mut rng::stream(0)).unwrap();
    assert_eq!(pure.depth(), 0);
    assert_eq!(pure.n_leaves(), 1);

    let x = one_feature(&[1.0, 2.0, 3.0, 4.0, 5.0]);
    let y = [Low, High, High, Low, High];
    let params = TreeParams {
        max_depth: Some(0),
        ..Default::default()
    };
    let stump = grow_tree(&x, &y, (0..5).collect(), &params, &mut rng::stream(0)).unwrap();
    assert_eq!(stump.depth(), 0);
    assert_eq!(stump.distribution().majority(), High);

    assert!(matches!(
        grow_tree(&x, &y, vec![], &TreeParams::default(), &mut rng::stream(0)),
        Err(Error::EmptySubset)
    ));
}

#[test]
fn xor_is_solved_in_two_levels() {
    let x = Matrix::from_rows(&[
        vec![0.0, 0.0],
        vec![0.0, 1.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
    ])
    .unwrap();
    let y = [Low, High, High, Low];
    // one corner weighted twice so that a first split has positive gain
    let tree = grow_tree(&x, &y, vec![0, 0, 1, 2, 3], &TreeParams::default(), &mut rng::stream(3)).unwrap();
    assert!(tree.n_splits() >= 2);
    assert!(tree.depth() <= 2);
    for i in 0..4 {
        let p = tree.leaf_ratios(x.row(i));
        assert_eq!(if p[1] > 0.5 { High } else { Low }, y[i]);
    }
}

#[test]
fn prediction_examples() {
    let leaf = DecisionTree {
        n_features: 1,
        root: TreeNode::Leaf {
            distribution: ClassDistribution::new(1, 3),
        },
    };
    let p = leaf.predict_proba(&[0.0]).unwrap();
    assert_eq!(p[High.index()], 0.75);
    assert_eq!(p[Low.index()], 0.25);

    let data = common::labeled(
        &[vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0], vec![4.0, 0.0]],
        &[Low, Low, High, High],
    );
    let params = TreeParams {
        max_depth: Some(1),
        ..Default::default()
    };
    let tree = DecisionTree::fit(&data, &params, 0).unwrap();
    assert_eq!(tree.predict_proba(&[1.0, 0.0]).unwrap()[High.index()], 0.0);
    assert_eq!(tree.predict(&[4.0, 0.0]).unwrap(), High);
    assert!(matches!(
        tree.predict_proba(&[1.0]),
        Err(Error::DimensionMismatch { expected: 2, found: 1 })
    ));
}

#[test]
fn node_importance_examples() {
    let leaf = TreeNode::Leaf {
        distribution: ClassDistribution::new(2, 2),
    };
    assert!(node_importances(&leaf, ImportanceFormula::Weighted).is_empty());

    let data = common::labeled(
        &[vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0], vec![4.0, 0.0]],
        &[Low, Low, High, High],
    );
    let tree = DecisionTree::fit(&data, &TreeParams::default(), 0).unwrap();
    let imp = node_importances(&tree.root, ImportanceFormula::Weighted);
    assert_eq!(imp.len(), 1);
    assert!((imp[&0] - 0.5).abs() < 1e-12);
}

#[test]
fn weighted_importance_sums_to_impurity_removed() {
    for seed in 0..10 {
        let data = common::random_dataset(seed, 80, 4);
        let tree = DecisionTree::fit(&data, &TreeParams::default(), seed).unwrap();
        let imp = node_importances(&tree.root, ImportanceFormula::Weighted);
        assert!(imp.values().all(|v| *v >= 0.0));
        // impurity removed = root impurity - weighted impurity of the leaves
        fn leaves(node: &TreeNode, n: f64) -> f64 {
            match node {
                TreeNode::Leaf { distribution } => {
                    distribution.total() as f64 / n * gini_impurity(distribution).unwrap()
                }
                TreeNode::Split { left, right, .. } => leaves(left, n) + leaves(right, n),
            }
        }
        let n = tree.root.sample_count() as f64;
        let removed = gini_impurity(tree.root.distribution()).unwrap() - leaves(&tree.root, n);
        let total: f64 = imp.values().sum();
        assert!((total - removed).abs() < 1e-12, "seed {seed}: {total} vs {removed}");
    }
}

#[test]
fn training_error_beats_majority() {
    for seed in 0..10 {
        let data = common::random_dataset(100 + seed, 60, 3);
        let params = TreeParams {
            max_depth: Some(3),
            ..Default::default()
        };
        let tree = DecisionTree::fit(&data, &params, seed).unwrap();
        let errors = (0..data.n_rows())
            .filter(|&i| tree.predict(data.features.row(i)).unwrap() != data.labels[i])
            .count();
        let counts = data.class_counts();
        assert!(errors <= counts[0].min(counts[1]));
    }
}

#[test]
fn fitting_is_deterministic() {
    let data = common::random_dataset(5, 120, 6);
    let params = TreeParams {
        max_features: Some(2),
        ..Default::default()
    };
    let a = DecisionTree::fit(&data, &params, 99).unwrap();
    let b = DecisionTree::fit(&data, &params, 99).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn invalid_params_are_rejected() {
    let data = common::random_dataset(1, 20, 2);
    let params = TreeParams {
        min_samples_leaf: 3,
        min_samples_split: 4,
        ..Default::default()
    };
    assert!(matches!(DecisionTree::fit(&data, &params, 0), Err(Error::InvalidParams(_))));
}

fn partition(x: &Matrix, rows: &[usize], feature: usize, threshold: f64) -> Vec<bool> {
    rows.iter().map(|&i| x.get(i, feature) <= threshold).collect()
}

proptest! {
    #[test]
    fn gini_is_scale_invariant(a in 0usize..50, b in 0usize..50, c in 1usize..20) {
        prop_assume!(a + b > 0);
        prop_assert!((gini(a, b) - gini(c * a, c * b)).abs() < 1e-12);
    }

    #[test]
    fn best_split_survives_monotone_transform(
        seed in 0u64..1000,
        n in 6usize..40,
    ) {
        let data = common::random_dataset(seed, n, 3);
        let rows: Vec<usize> = (0..n).collect();
        let transformed: Vec<Vec<f64>> = data
            .features
            .rows()
            .map(|r| vec![r[0].exp(), 3.0 * r[1] + 7.0, r[2].powi(3)])
            .collect();
        let tx = Matrix::from_rows(&transformed).unwrap();
        let a = best_split(&data.features, &data.labels, &rows, &[0, 1, 2], 1);
        let b = best_split(&tx, &data.labels, &rows, &[0, 1, 2], 1);
        match (a, b) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                prop_assert_eq!(a.feature, b.feature);
                prop_assert_eq!(
                    partition(&data.features, &rows, a.feature, a.threshold),
                    partition(&tx, &rows, b.feature, b.threshold)
                );
            }
            _ => prop_assert!(false, "split found on one side only"),
        }
    }
}
