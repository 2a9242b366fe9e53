//! Gini feature importance for forests, rank aggregation across counties,
//! and the overall importance score used to pick the top features per hazard.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cart::{node_importances, ImportanceFormula};
use crate::error::{Error, Result};
use crate::forest::ForestModel;
use crate::gbt::{BoostedModel, RegNode};

/// Default number of features reported as important.
pub const DEFAULT_TOP_K: usize = 7;

/// Summed split importance per feature over every tree of the forest.
pub fn forest_importance(model: &ForestModel, formula: ImportanceFormula) -> Vec<f64> {
    let mut raw = vec![0.0; model.feature_names.len()];
    for tree in &model.trees {
        for (feature, value) in node_importances(tree, formula) {
            raw[feature] += value;
        }
    }
    raw
}

/// Divides by the total so the entries sum to one.
pub fn normalize(raw: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return Err(Error::AllZeroImportance);
    }
    if total < 0.0 {
        return Err(Error::NegativeImportanceTotal { total });
    }
    Ok(raw.iter().map(|v| v / total).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub feature_names: Vec<String>,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl ImportanceVector {
    pub fn from_forest(model: &ForestModel, formula: ImportanceFormula) -> Result<Self> {
        let raw = forest_importance(model, formula);
        let normalized = normalize(&raw)?;
        Ok(ImportanceVector {
            feature_names: model.feature_names.clone(),
            raw,
            normalized,
        })
    }

    /// Feature indices by decreasing normalized importance (ties by index).
    pub fn ordering(&self) -> Vec<usize> {
        order_desc(&self.normalized)
    }
}

fn order_desc(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Total split gain per feature of a boosted model, normalized to sum to
/// one. A diagnostic only; the forest is the reference importance model.
pub fn gbt_importance(model: &BoostedModel) -> Result<Vec<f64>> {
    let mut raw = vec![0.0; model.feature_names.len()];
    let mut stack: Vec<&RegNode> = model.stages.iter().collect();
    while let Some(node) = stack.pop() {
        if let RegNode::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = node
        {
            raw[*feature] += gain;
            stack.push(left);
            stack.push(right);
        }
    }
    normalize(&raw)
}

/// Ranks in ascending order of importance: least important gets 1, most
/// important gets F. Tied values share the mean of the ranks they occupy.
pub fn rank_features(importance: &[f64]) -> Vec<f64> {
    let n = importance.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| importance[a].total_cmp(&importance[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && importance[idx[end]] == importance[idx[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = mean_rank;
        }
        start = end;
    }
    ranks
}

/// Per-county rank columns for one hazard.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankMatrix {
    pub feature_names: Vec<String>,
    pub counties: Vec<String>,
    /// `ranks[i][j]`: rank of feature `j` in county `i`.
    pub ranks: Vec<Vec<f64>>,
}

impl RankMatrix {
    pub fn new(feature_names: Vec<String>) -> Self {
        RankMatrix {
            feature_names,
            counties: Vec::new(),
            ranks: Vec::new(),
        }
    }

    pub fn push_county(&mut self, county: impl Into<String>, normalized: &[f64]) -> Result<()> {
        if normalized.len() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                found: normalized.len(),
            });
        }
        self.counties.push(county.into());
        self.ranks.push(rank_features(normalized));
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverallImportance {
    pub feature_names: Vec<String>,
    /// `Σ_i R_ij / (F · C)` per feature.
    pub scores: Vec<f64>,
    pub requested_k: usize,
    /// Selected features by decreasing score. Longer than `requested_k`
    /// when features tie at the boundary.
    pub top: Vec<usize>,
    /// How many features beyond `requested_k` were kept because of ties.
    pub overflow: usize,
}

impl OverallImportance {
    pub fn top_names(&self) -> Vec<&str> {
        self.top.iter().map(|&j| self.feature_names[j].as_str()).collect()
    }
}

pub fn overall_importance(ranks: &RankMatrix, top_k: usize) -> Result<OverallImportance> {
    let c = ranks.ranks.len();
    if c == 0 {
        return Err(Error::NoEntries("rank matrix".into()));
    }
    let f = ranks.n_features();
    let denom = (f * c) as f64;
    let scores: Vec<f64> = (0..f)
        .map(|j| ranks.ranks.iter().map(|col| col[j]).sum::<f64>() / denom)
        .collect();
    let order = order_desc(&scores);
    let k = top_k.min(f);
    let mut top: Vec<usize> = order[..k].to_vec();
    if k > 0 {
        let boundary = scores[order[k - 1]];
        top.extend(order[k..].iter().copied().filter(|&j| scores[j] == boundary));
    }
    Ok(OverallImportance {
        feature_names: ranks.feature_names.clone(),
        overflow: top.len() - k,
        scores,
        requested_k: top_k,
        top,
    })
}

/// Feature → group mapping (e.g. built environment, land cover).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureGroups {
    pub groups: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupShare {
    pub group: String,
    pub count: usize,
    /// Fraction of the selected features in this group.
    pub share: f64,
}

impl FeatureGroups {
    /// Reads a two-column `feature,group` CSV with a header row.
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut groups = BTreeMap::new();
        for record in rdr.records() {
            let record = record?;
            let (Some(feature), Some(group)) = (record.get(0), record.get(1)) else {
                return Err(Error::Config("feature group rows need two columns".into()));
            };
            groups.insert(feature.trim().to_string(), group.trim().to_string());
        }
        Ok(FeatureGroups { groups })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(file)
    }

    pub fn group_of(&self, feature: &str) -> &str {
        self.groups.get(feature).map_or("ungrouped", String::as_str)
    }

    /// Share of each group among `selected` feature names, by group name.
    pub fn rollup<'a>(&self, selected: impl IntoIterator<Item = &'a str>) -> Vec<GroupShare> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut total = 0;
        for name in selected {
            *counts.entry(self.group_of(name)).or_default() += 1;
            total += 1;
        }
        counts
            .into_iter()
            .map(|(group, count)| GroupShare {
                group: group.to_string(),
                count,
                share: count as f64 / total as f64,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[2.0, 2.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(normalize(&[3.0, 1.0, 0.0]).unwrap(), vec![0.75, 0.25, 0.0]);
        assert!(matches!(normalize(&[0.0, 0.0]), Err(Error::AllZeroImportance)));
        assert!(matches!(
            normalize(&[-1.0, 0.5]),
            Err(Error::NegativeImportanceTotal { .. })
        ));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_features(&[0.5, 0.3, 0.2]), vec![3.0, 2.0, 1.0]);
        assert_eq!(rank_features(&[0.4, 0.4, 0.2]), vec![2.5, 2.5, 1.0]);
        assert_eq!(rank_features(&[0.1, 0.1, 0.1, 0.7]), vec![2.0, 2.0, 2.0, 4.0]);
    }

    fn matrix(cols: &[&[f64]]) -> RankMatrix {
        let f = cols[0].len();
        let mut m = RankMatrix::new((0..f).map(|j| format!("f{j}")).collect());
        for (i, col) in cols.iter().enumerate() {
            m.push_county(format!("c{i}"), col).unwrap();
        }
        m
    }

    #[test]
    fn overall_bounds() {
        let mut imp = vec![0.01; 35];
        imp[0] = 0.5;
        imp[34] = 0.0;
        let m = matrix(&[&imp, &imp, &imp]);
        let o = overall_importance(&m, 7).unwrap();
        assert_eq!(o.scores[0], 1.0);
        assert!((o.scores[34] - 1.0 / 35.0).abs() < 1e-12);
        assert_eq!(o.top[0], 0);
    }

    #[test]
    fn boundary_ties_are_reported() {
        let m = matrix(&[&[0.4, 0.2, 0.2, 0.2]]);
        let o = overall_importance(&m, 2).unwrap();
        assert_eq!(o.top, vec![0, 1, 2, 3]);
        assert_eq!(o.overflow, 2);
        let o = overall_importance(&m, 1).unwrap();
        assert_eq!((o.top.clone(), o.overflow), (vec![0], 0));
    }

    #[test]
    fn group_rollup() {
        let groups = FeatureGroups::read(
            "feature,group\nRace,social_demographic\nRailway,built_environment\nIncome,social_demographic\n"
                .as_bytes(),
        )
        .unwrap();
        let shares = groups.rollup(["Race", "Income", "Railway", "Mystery"]);
        let find = |g: &str| shares.iter().find(|s| s.group == g).unwrap().share;
        assert_eq!(find("social_demographic"), 0.5);
        assert_eq!(find("built_environment"), 0.25);
        assert_eq!(find("ungrouped"), 0.25);
    }
}
