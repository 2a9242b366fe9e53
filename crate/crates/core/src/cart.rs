//! Binary classification trees grown with the Gini criterion.
//!
//! Every split node keeps its own impurity, the impurities of both children
//! and (through the children) the class counts on each side, so feature
//! importance can be recomputed from a serialized tree alone.

use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Matrix, RiskLabel};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Splits whose impurity decrease does not exceed this are treated as
/// no improvement (absorbs rounding noise on exactly-zero decreases).
pub const MIN_GAIN: f64 = 1e-12;

/// Class counts at a node. Bootstrap duplicates are counted with multiplicity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub low: usize,
    pub high: usize,
}

impl ClassDistribution {
    pub fn new(low: usize, high: usize) -> Self {
        ClassDistribution { low, high }
    }

    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a RiskLabel>) -> Self {
        let mut dist = ClassDistribution::default();
        for label in labels {
            dist.add(*label);
        }
        dist
    }

    #[inline]
    pub fn add(&mut self, label: RiskLabel) {
        match label {
            RiskLabel::Low => self.low += 1,
            RiskLabel::High => self.high += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.low + self.high
    }

    pub fn counts(&self) -> [usize; 2] {
        [self.low, self.high]
    }

    /// Class ratios indexed by [`RiskLabel::index`]; zeros when empty.
    pub fn ratios(&self) -> [f64; 2] {
        let n = self.total();
        if n == 0 {
            return [0.0, 0.0];
        }
        let n = n as f64;
        [self.low as f64 / n, self.high as f64 / n]
    }

    pub fn is_pure(&self) -> bool {
        self.low == 0 || self.high == 0
    }

    /// Majority class; ties go to low.
    pub fn majority(&self) -> RiskLabel {
        if self.high > self.low {
            RiskLabel::High
        } else {
            RiskLabel::Low
        }
    }
}

/// `Σ_k p_k (1 - p_k)` over the two classes.
pub fn gini_impurity(dist: &ClassDistribution) -> Result<f64> {
    if dist.total() == 0 {
        return Err(Error::EmptyDistribution);
    }
    Ok(gini_unchecked(dist))
}

#[inline]
fn gini_unchecked(dist: &ClassDistribution) -> f64 {
    dist.ratios().iter().map(|p| p * (1.0 - p)).sum()
}

/// How a split node's contribution to feature importance is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceFormula {
    /// `(n_m / n) · [G_m - (n_l/n_m) G_l - (n_r/n_m) G_r]`, never negative.
    #[default]
    Weighted,
    /// `G_m - G_l - G_r` without sample weights; may be negative.
    Unweighted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    /// Features drawn per node; `None` uses all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

impl TreeParams {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParams("min_samples_leaf must be >= 1".into()));
        }
        if self.min_samples_split < 2 * self.min_samples_leaf {
            return Err(Error::InvalidParams(format!(
                "min_samples_split ({}) must be >= 2 * min_samples_leaf ({})",
                self.min_samples_split, self.min_samples_leaf
            )));
        }
        if let Some(m) = self.max_features {
            if m == 0 || m > n_features {
                return Err(Error::InvalidParams(format!(
                    "max_features must lie in [1, {n_features}], got {m}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        distribution: ClassDistribution,
    },
    Split {
        feature: usize,
        threshold: f64,
        distribution: ClassDistribution,
        impurity: f64,
        left_impurity: f64,
        right_impurity: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn distribution(&self) -> &ClassDistribution {
        match self {
            TreeNode::Leaf { distribution } | TreeNode::Split { distribution, .. } => distribution,
        }
    }

    pub fn sample_count(&self) -> usize {
        self.distribution().total()
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_splits(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.n_splits() + right.n_splits(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Routes `x` to a leaf (`x_j <= t` goes left) and returns its class
    /// frequencies indexed by [`RiskLabel::index`].
    pub fn leaf_ratios(&self, x: &[f64]) -> [f64; 2] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { distribution } => return distribution.ratios(),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// `G_m - (n_l/n_m) G_l - (n_r/n_m) G_r`
    pub gain: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mid = if (a + b).is_finite() {
        (a + b) / 2.0
    } else {
        a / 2.0 + b / 2.0
    };
    // adjacent doubles: keep `a` so that `a` still routes left and `b` right
    if mid > a && mid < b {
        mid
    } else {
        a
    }
}

/// Exhaustive search over the candidate features for the split with the
/// largest weighted Gini decrease.
///
/// Thresholds are midpoints of adjacent distinct values. Ties go to the
/// lowest feature index, then the lowest threshold. Returns `None` when no
/// admissible split decreases impurity.
pub fn best_split(
    x: &Matrix,
    y: &[RiskLabel],
    rows: &[usize],
    candidates: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitCandidate> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let parent = ClassDistribution::from_labels(rows.iter().map(|&i| &y[i]));
    let parent_gini = gini_unchecked(&parent);
    let n_f = n as f64;
    let min_leaf = min_samples_leaf.max(1);

    let mut sorted_candidates = candidates.to_vec();
    sorted_candidates.sort_unstable();
    sorted_candidates.dedup();

    let mut best: Option<SplitCandidate> = None;
    let mut pairs: Vec<(f64, RiskLabel)> = Vec::with_capacity(n);
    for &feature in &sorted_candidates {
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (x.get(i, feature), y[i])));
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        let mut left = ClassDistribution::default();
        for i in 0..n - 1 {
            left.add(pairs[i].1);
            let n_left = i + 1;
            if pairs[i].0 == pairs[i + 1].0 || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let right = ClassDistribution::new(parent.low - left.low, parent.high - left.high);
            let gain = parent_gini
                - (n_left as f64 / n_f) * gini_unchecked(&left)
                - ((n - n_left) as f64 / n_f) * gini_unchecked(&right);
            if gain > MIN_GAIN && best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate {
                    feature,
                    threshold: midpoint(pairs[i].0, pairs[i + 1].0),
                    gain,
                });
            }
        }
    }
    best
}

/// Grows a tree over `rows` (indices into `x`/`y`, duplicates allowed).
///
/// Feature subsampling draws from `rng` at every split attempt, depth first,
/// left before right.
pub fn grow_tree(
    x: &Matrix,
    y: &[RiskLabel],
    rows: Vec<usize>,
    params: &TreeParams,
    rng: &mut Stream,
) -> Result<TreeNode> {
    if rows.is_empty() {
        return Err(Error::EmptySubset);
    }
    params.validate(x.n_cols())?;
    Ok(grow_node(x, y, rows, params, rng, 0))
}

fn grow_node(
    x: &Matrix,
    y: &[RiskLabel],
    rows: Vec<usize>,
    params: &TreeParams,
    rng: &mut Stream,
    depth: usize,
) -> TreeNode {
    let distribution = ClassDistribution::from_labels(rows.iter().map(|&i| &y[i]));
    let at_depth_limit = params.max_depth.is_some_and(|d| depth >= d);
    if distribution.is_pure() || at_depth_limit || rows.len() < params.min_samples_split {
        return TreeNode::Leaf { distribution };
    }

    let n_features = x.n_cols();
    let candidates: Vec<usize> = match params.max_features {
        Some(m) if m < n_features => index::sample(rng, n_features, m).into_vec(),
        _ => (0..n_features).collect(),
    };
    let Some(split) = best_split(x, y, &rows, &candidates, params.min_samples_leaf) else {
        return TreeNode::Leaf { distribution };
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&i| x.get(i, split.feature) <= split.threshold);
    let left_dist = ClassDistribution::from_labels(left_rows.iter().map(|&i| &y[i]));
    let right_dist = ClassDistribution::from_labels(right_rows.iter().map(|&i| &y[i]));
    let left = grow_node(x, y, left_rows, params, rng, depth + 1);
    let right = grow_node(x, y, right_rows, params, rng, depth + 1);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        distribution,
        impurity: gini_unchecked(&distribution),
        left_impurity: gini_unchecked(&left_dist),
        right_impurity: gini_unchecked(&right_dist),
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Importance contributed by one split node, given the root sample count.
pub fn split_importance(node: &TreeNode, root_count: usize, formula: ImportanceFormula) -> f64 {
    let TreeNode::Split {
        impurity,
        left_impurity,
        right_impurity,
        distribution,
        left,
        right,
        ..
    } = node
    else {
        return 0.0;
    };
    match formula {
        ImportanceFormula::Unweighted => impurity - left_impurity - right_impurity,
        ImportanceFormula::Weighted => {
            let n_m = distribution.total() as f64;
            let n_l = left.sample_count() as f64;
            let n_r = right.sample_count() as f64;
            (n_m / root_count as f64)
                * (impurity - (n_l / n_m) * left_impurity - (n_r / n_m) * right_impurity)
        }
    }
}

/// Accumulated importance per feature over every split node of `root`.
/// Features that are never split on do not appear.
pub fn node_importances(root: &TreeNode, formula: ImportanceFormula) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    let root_count = root.sample_count();
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if let TreeNode::Split {
            feature,
            left,
            right,
            ..
        } = node
        {
            *out.entry(*feature).or_insert(0.0) += split_importance(node, root_count, formula);
            stack.push(right);
            stack.push(left);
        }
    }
    out
}

/// A grown tree together with the width of the feature vectors it expects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn fit(data: &LabeledDataset, params: &TreeParams, seed: u64) -> Result<Self> {
        let mut rng = rng::stream(seed);
        let rows = (0..data.n_rows()).collect();
        let root = grow_tree(&data.features, &data.labels, rows, params, &mut rng)?;
        Ok(DecisionTree {
            n_features: data.n_features(),
            root,
        })
    }

    /// Class probabilities indexed by [`RiskLabel::index`].
    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.root.leaf_ratios(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<RiskLabel> {
        let p = self.predict_proba(x)?;
        Ok(if p[1] > 0.5 {
            RiskLabel::High
        } else {
            RiskLabel::Low
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use RiskLabel::{High, Low};

    fn column(values: &[f64]) -> Matrix {
        Matrix::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini_impurity(&ClassDistribution::new(5, 5)).unwrap(), 0.5);
        assert_eq!(gini_impurity(&ClassDistribution::new(7, 0)).unwrap(), 0.0);
        assert!((gini_impurity(&ClassDistribution::new(1, 3)).unwrap() - 0.375).abs() < 1e-15);
        assert!(matches!(
            gini_impurity(&ClassDistribution::default()),
            Err(Error::EmptyDistribution)
        ));
    }

    #[test]
    fn best_split_on_separable_line() {
        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        let y = [Low, Low, High, High];
        let s = best_split(&x, &y, &[0, 1, 2, 3], &[0], 1).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 2.5);
        assert!((s.gain - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_feature_has_no_split() {
        let x = column(&[3.0, 3.0, 3.0, 3.0]);
        let y = [Low, High, Low, High];
        assert!(best_split(&x, &y, &[0, 1, 2, 3], &[0], 1).is_none());
    }

    #[test]
    fn tie_goes_to_lower_feature_index() {
        let x = Matrix::from_rows(&[
            vec![1.0, 10.0],
            vec![2.0, 20.0],
            vec![3.0, 30.0],
            vec![4.0, 40.0],
        ])
        .unwrap();
        let y = [Low, Low, High, High];
        let s = best_split(&x, &y, &[0, 1, 2, 3], &[1, 0], 1).unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn min_samples_leaf_restricts_thresholds() {
        let x = column(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = [Low, High, High, High, High];
        // the pure split after the first row leaves only one sample on the left
        let s = best_split(&x, &y, &[0, 1, 2, 3, 4], &[0], 2).unwrap();
        assert_eq!(s.threshold, 2.5);
    }

    #[test]
    fn leaf_and_depth_rules() {
        let x = column(&[1.0, 2.0, 3.0]);
        let mut rng = rng::stream(0);
        let pure = grow_tree(&x, &[High, High, High], vec![0, 1, 2], &TreeParams::default(), &mut rng)
            .unwrap();
        assert_eq!(pure.depth(), 0);

        let stump = TreeParams {
            max_depth: Some(0),
            ..TreeParams::default()
        };
        let leaf = grow_tree(&x, &[High, Low, High], vec![0, 1, 2], &stump, &mut rng).unwrap();
        assert_eq!(leaf.n_splits(), 0);
        assert_eq!(leaf.distribution().majority(), High);

        assert!(matches!(
            grow_tree(&x, &[High, Low, High], vec![], &stump, &mut rng),
            Err(Error::EmptySubset)
        ));
    }

    #[test]
    fn xor_needs_two_levels() {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let y = [Low, High, High, Low];
        // no single split reduces impurity on XOR, so the greedy tree stays a
        // leaf; duplicating one corner breaks the symmetry and lets it proceed
        let rows = vec![0, 0, 1, 2, 3];
        let tree = grow_tree(&x, &y, rows, &TreeParams::default(), &mut rng::stream(1)).unwrap();
        assert!(tree.n_splits() >= 2);
        assert!(tree.depth() <= 2);
        for (i, label) in y.iter().enumerate() {
            let p = tree.leaf_ratios(x.row(i));
            assert_eq!(if p[1] > 0.5 { High } else { Low }, *label);
        }
    }

    #[test]
    fn predict_proba_paths() {
        let single = DecisionTree {
            n_features: 1,
            root: TreeNode::Leaf {
                distribution: ClassDistribution::new(1, 3),
            },
        };
        assert_eq!(single.predict_proba(&[0.0]).unwrap(), [0.25, 0.75]);
        assert!(matches!(
            single.predict_proba(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));

        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        let root = grow_tree(
            &x,
            &[Low, Low, High, High],
            vec![0, 1, 2, 3],
            &TreeParams::default(),
            &mut rng::stream(0),
        )
        .unwrap();
        let tree = DecisionTree { n_features: 1, root };
        assert_eq!(tree.predict_proba(&[1.0]).unwrap()[1], 0.0);
    }

    #[test]
    fn stump_importance() {
        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        let root = grow_tree(
            &x,
            &[Low, Low, High, High],
            vec![0, 1, 2, 3],
            &TreeParams::default(),
            &mut rng::stream(0),
        )
        .unwrap();
        let weighted = node_importances(&root, ImportanceFormula::Weighted);
        assert_eq!(weighted.len(), 1);
        assert!((weighted[&0] - 0.5).abs() < 1e-15);
        let literal = node_importances(&root, ImportanceFormula::Unweighted);
        assert!((literal[&0] - 0.5).abs() < 1e-15);

        let leaf = TreeNode::Leaf {
            distribution: ClassDistribution::new(2, 2),
        };
        assert!(node_importances(&leaf, ImportanceFormula::Weighted).is_empty());
    }

    #[test]
    fn params_validation() {
        let bad = TreeParams {
            min_samples_leaf: 3,
            min_samples_split: 4,
            ..TreeParams::default()
        };
        assert!(bad.validate(5).is_err());
        let bad = TreeParams {
            max_features: Some(6),
            ..TreeParams::default()
        };
        assert!(bad.validate(5).is_err());
    }
}
