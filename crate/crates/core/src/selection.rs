//! Train/test splitting and cross-validated grid search.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, RiskLabel};
use crate::error::{Error, Result};
use crate::forest::ForestParams;
use crate::gbt::GbtParams;
use crate::metrics::{confusion, f_beta};
use crate::model::{Classifier, ModelConfig, ModelKind};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            stratified: true,
            seed: 0,
        }
    }
}

/// Training partition. Cross-validation only ever sees this type.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSplit(pub LabeledDataset);

/// Held-out partition.
#[derive(Clone, Debug, PartialEq)]
pub struct TestSplit(pub LabeledDataset);

/// Number of training rows drawn from a group of `n`: half-to-even rounding,
/// kept within `[1, n - 1]`.
pub fn train_count(n: usize, fraction: f64) -> usize {
    let k = (fraction * n as f64).round_ties_even() as usize;
    k.clamp(1, n.saturating_sub(1).max(1))
}

fn members_by_class(data: &LabeledDataset) -> [Vec<usize>; 2] {
    let mut members = [Vec::new(), Vec::new()];
    for i in data.canonical_order() {
        members[data.labels[i].index()].push(i);
    }
    members
}

fn require_class_sizes(data: &LabeledDataset, min: usize) -> Result<[Vec<usize>; 2]> {
    data.require_both_classes()?;
    let members = members_by_class(data);
    for (c, m) in members.iter().enumerate() {
        if m.len() < min {
            return Err(Error::ClassTooSmall {
                class: RiskLabel::from_index(c).to_string(),
                count: m.len(),
            });
        }
    }
    Ok(members)
}

/// Splits per class (or globally when not stratified) and returns both
/// partitions in original row order.
pub fn stratified_split(data: &LabeledDataset, spec: &SplitSpec) -> Result<(TrainSplit, TestSplit)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParams(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let members = require_class_sizes(data, 2)?;
    let mut rng = rng::substream(spec.seed, &["train-test-split"]);
    let mut train = Vec::new();
    let mut test = Vec::new();
    if spec.stratified {
        for mut group in members {
            group.shuffle(&mut rng);
            let k = train_count(group.len(), spec.train_fraction);
            train.extend_from_slice(&group[..k]);
            test.extend_from_slice(&group[k..]);
        }
    } else {
        let mut all = data.canonical_order();
        all.shuffle(&mut rng);
        let k = train_count(all.len(), spec.train_fraction);
        train.extend_from_slice(&all[..k]);
        test.extend_from_slice(&all[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((TrainSplit(data.subset(&train)), TestSplit(data.subset(&test))))
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// continuing the deal across classes so fold sizes differ by at most one.
pub fn stratified_folds(data: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidParams(format!("k must be >= 2, got {k}")));
    }
    if data.n_rows() < k {
        return Err(Error::TooFewSamples { n: data.n_rows(), k });
    }
    let members = require_class_sizes(data, 2)?;
    let mut rng = rng::substream(seed, &["cv-folds"]);
    let mut fold_of = vec![0; data.n_rows()];
    let mut next = 0;
    for mut group in members {
        group.shuffle(&mut rng);
        for i in group {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok(fold_of)
}

/// One hyperparameter value; `None` stands for "unlimited".
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperValue(pub Option<f64>);

impl HyperValue {
    pub const UNLIMITED: HyperValue = HyperValue(None);

    pub fn num(v: f64) -> Self {
        HyperValue(Some(v))
    }
}

impl Eq for HyperValue {}

impl Ord for HyperValue {
    /// Numbers by value, with "unlimited" after every number.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0, other.0) {
            (Some(a), Some(b)) => a.total_cmp(&b),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        }
    }
}

impl PartialOrd for HyperValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("unlimited"),
        }
    }
}

/// A single grid point, keyed by hyperparameter name.
pub type GridPoint = BTreeMap<String, HyperValue>;

pub fn describe_point(point: &GridPoint) -> String {
    point
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn cmp_points(a: &GridPoint, b: &GridPoint) -> Ordering {
    a.iter().cmp(b.iter())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamGrid(pub BTreeMap<String, Vec<HyperValue>>);

impl ParamGrid {
    pub fn with(mut self, name: &str, values: impl IntoIterator<Item = HyperValue>) -> Self {
        self.0.insert(name.to_string(), values.into_iter().collect());
        self
    }

    /// Cartesian product; names in sorted order, values in listed order,
    /// with the last name varying fastest.
    pub fn expand(&self) -> Vec<GridPoint> {
        let mut points = vec![GridPoint::new()];
        for (name, values) in &self.0 {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(name.clone(), *v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty() || self.0.values().any(Vec::is_empty)
    }

    pub fn default_forest() -> Self {
        ParamGrid::default()
            .with("n_trees", [HyperValue::num(100.0), HyperValue::num(300.0)])
            .with("max_depth", [HyperValue::UNLIMITED, HyperValue::num(8.0)])
            .with("min_samples_leaf", [HyperValue::num(1.0), HyperValue::num(5.0)])
    }

    pub fn default_gbt() -> Self {
        ParamGrid::default()
            .with("rounds", [HyperValue::num(100.0), HyperValue::num(300.0)])
            .with("max_depth", [HyperValue::num(3.0), HyperValue::num(6.0)])
            .with("learning_rate", [HyperValue::num(0.1), HyperValue::num(0.3)])
            .with("l2_reg", [HyperValue::num(1.0)])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSpec {
    pub k: usize,
    pub grid: ParamGrid,
    pub beta: f64,
}

impl CvSpec {
    pub fn new(grid: ParamGrid) -> Self {
        CvSpec {
            k: 10,
            grid,
            beta: 1.5,
        }
    }
}

/// Base hyperparameters of a family, before grid values are applied.
pub fn base_config(family: ModelKind) -> ModelConfig {
    match family {
        ModelKind::Forest => ModelConfig::Forest(ForestParams::default()),
        ModelKind::Gbt => ModelConfig::Gbt(GbtParams::default()),
    }
}

pub fn apply_point(base: &ModelConfig, point: &GridPoint) -> Result<ModelConfig> {
    let mut config = base.clone();
    for (name, value) in point {
        config.set(name, value.0)?;
    }
    Ok(config)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub point: usize,
    pub params: String,
    pub fold: usize,
    /// `None` when F-beta is undefined on the fold.
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub points: Vec<GridPoint>,
    pub mean_scores: Vec<Option<f64>>,
    pub best_index: usize,
    pub best_point: GridPoint,
    pub best_config: ModelConfig,
    pub table: Vec<CvRow>,
}

impl CvResult {
    pub fn write_table_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["point", "params", "fold", "score"])?;
        for row in &self.table {
            wtr.write_record([
                row.point.to_string(),
                row.params.clone(),
                row.fold.to_string(),
                row.score.map(|s| format!("{s:.12}")).unwrap_or_default(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<cv table>", e))?;
        Ok(())
    }
}

/// k-fold cross-validated grid search on the training partition.
///
/// Every grid point sees the same folds and the same per-fold model seeds,
/// so identical points score identically. The best point has the highest
/// mean validation F-beta; ties go to the lexicographically smallest point.
pub fn cross_validate(
    train: &TrainSplit,
    base: &ModelConfig,
    cv: &CvSpec,
    seed: u64,
) -> Result<CvResult> {
    let data = &train.0;
    if cv.grid.is_empty() {
        return Err(Error::InvalidParams("empty hyperparameter grid".into()));
    }
    let points = cv.grid.expand();
    let configs = points
        .iter()
        .map(|p| apply_point(base, p))
        .collect::<Result<Vec<_>>>()?;
    let fold_of = stratified_folds(data, cv.k, seed)?;
    let folds: Vec<(LabeledDataset, LabeledDataset)> = (0..cv.k)
        .map(|f| {
            let (fit_rows, val_rows): (Vec<usize>, Vec<usize>) =
                (0..data.n_rows()).partition(|&i| fold_of[i] != f);
            (data.subset(&fit_rows), data.subset(&val_rows))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cv.k).map(move |f| (p, f)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(p, f)| {
            let (fit, val) = &folds[f];
            let model = configs[p].fit(fit, rng::derive_seed(seed, &["cv-model", &f.to_string()]))?;
            let predicted = model.predict(&val.features)?;
            match f_beta(&confusion(&val.labels, &predicted)?, cv.beta) {
                Ok(score) => Ok(Some(score)),
                Err(Error::NoPositives) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<Option<f64>>>>()?;

    let mut table = Vec::with_capacity(jobs.len());
    let mut mean_scores = Vec::with_capacity(points.len());
    for (p, point) in points.iter().enumerate() {
        let params = describe_point(point);
        let mut defined = Vec::new();
        for f in 0..cv.k {
            let score = scores[p * cv.k + f];
            defined.extend(score);
            table.push(CvRow {
                point: p,
                params: params.clone(),
                fold: f,
                score,
            });
        }
        mean_scores.push(
            (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
        );
    }

    let mut best: Option<(usize, f64)> = None;
    for (p, score) in mean_scores.iter().enumerate() {
        let Some(score) = *score else { continue };
        let better = match best {
            None => true,
            Some((b, best_score)) => {
                score > best_score
                    || (score == best_score && cmp_points(&points[p], &points[b]) == Ordering::Less)
            }
        };
        if better {
            best = Some((p, score));
        }
    }
    let (best_index, _) = best.ok_or_else(|| Error::NoEntries("cross-validation scores".into()))?;

    Ok(CvResult {
        best_point: points[best_index].clone(),
        best_config: configs[best_index].clone(),
        points,
        mean_scores,
        best_index,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_rule() {
        assert_eq!(train_count(6, 0.7), 4);
        assert_eq!(train_count(4, 0.7), 3);
        // 0.5 * 5 = 2.5 rounds to even
        assert_eq!(train_count(5, 0.5), 2);
        assert_eq!(train_count(7, 0.5), 4);
        assert_eq!(train_count(2, 0.7), 1);
    }

    #[test]
    fn grid_expansion_order() {
        let grid = ParamGrid::default()
            .with("b", [HyperValue::num(1.0), HyperValue::num(2.0)])
            .with("a", [HyperValue::UNLIMITED, HyperValue::num(8.0)]);
        let points = grid.expand();
        assert_eq!(points.len(), 4);
        assert_eq!(describe_point(&points[0]), "a=unlimited;b=1");
        assert_eq!(describe_point(&points[3]), "a=8;b=2");
        assert_eq!(ParamGrid::default_forest().expand().len(), 8);
        assert_eq!(ParamGrid::default_gbt().expand().len(), 8);
    }

    #[test]
    fn hyper_value_ordering() {
        assert!(HyperValue::num(8.0) < HyperValue::UNLIMITED);
        assert!(HyperValue::num(1.0) < HyperValue::num(5.0));
    }

    #[test]
    fn apply_point_rejects_unknown_names() {
        let mut point = GridPoint::new();
        point.insert("depthh".into(), HyperValue::num(3.0));
        assert!(matches!(
            apply_point(&base_config(ModelKind::Forest), &point),
            Err(Error::UnknownHyperparameter { .. })
        ));
    }

    #[test]
    fn min_samples_leaf_lifts_split_minimum() {
        let mut point = GridPoint::new();
        point.insert("min_samples_leaf".into(), HyperValue::num(5.0));
        let ModelConfig::Forest(p) = apply_point(&base_config(ModelKind::Forest), &point).unwrap()
        else {
            unreachable!()
        };
        assert_eq!(p.tree.min_samples_split, 10);
    }
}
