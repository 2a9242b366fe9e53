//! Bagged random forest with per-node feature subsampling and soft voting.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::{grow_tree, TreeNode, TreeParams};
use crate::dataset::{LabeledDataset, Matrix};
use crate::error::{Error, Result};
use crate::model::{check_width, Classifier, ModelKind, FORMAT_VERSION};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree: TreeParams,
    pub n_trees: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            tree: TreeParams::default(),
            n_trees: 100,
            bootstrap: true,
        }
    }
}

/// `ceil(sqrt(F))`
pub fn default_max_features(n_features: usize) -> usize {
    ((n_features as f64).sqrt().ceil() as usize).clamp(1, n_features.max(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub params: ForestParams,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub schema_fingerprint: String,
    pub trees: Vec<TreeNode>,
}

/// Seed of tree `index`'s random stream.
pub fn tree_seed(seed: u64, index: usize) -> u64 {
    rng::derive_seed(seed, &["forest-tree", &index.to_string()])
}

/// Trains `params.n_trees` trees, each on its own bootstrap resample drawn
/// over the tract-id-sorted rows with a stream derived from `(seed, index)`.
///
/// Trees train in parallel; the output is identical to sequential training.
pub fn train_forest(data: &LabeledDataset, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    data.require_both_classes()?;
    if params.n_trees == 0 {
        return Err(Error::InvalidParams("n_trees must be >= 1".into()));
    }
    let n_features = data.n_features();
    let mut params = params.clone();
    if params.tree.max_features.is_none() {
        params.tree.max_features = Some(default_max_features(n_features));
    }
    params.tree.validate(n_features)?;

    let order = data.canonical_order();
    let n = order.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng::stream(tree_seed(seed, i));
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| order[stream.random_range(0..n)]).collect()
            } else {
                order.clone()
            };
            grow_tree(&data.features, &data.labels, rows, &params.tree, &mut stream)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ForestModel {
        format_version: FORMAT_VERSION,
        kind: ModelKind::Forest,
        params,
        seed,
        feature_names: data.schema.names().to_vec(),
        schema_fingerprint: data.schema.fingerprint(),
        trees,
    })
}

impl ForestModel {
    /// Mean of per-tree leaf frequencies of the high class.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_width(self.feature_names.len(), x)?;
        let n_trees = self.trees.len() as f64;
        Ok(x.rows()
            .map(|row| {
                self.trees
                    .iter()
                    .map(|t| t.leaf_ratios(row)[1])
                    .sum::<f64>()
                    / n_trees
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ForestModel = serde_json::from_str(text)?;
        if model.format_version != FORMAT_VERSION || model.kind != ModelKind::Forest {
            return Err(Error::Config(format!(
                "unsupported forest model (version {}, kind {:?})",
                model.format_version, model.kind
            )));
        }
        Ok(model)
    }
}

impl Classifier for ForestModel {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn schema_fingerprint(&self) -> &str {
        &self.schema_fingerprint
    }

    fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        ForestModel::predict_proba(self, x)
    }
}
