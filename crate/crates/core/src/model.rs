//! Behaviour shared by trained models.

use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Matrix, RiskLabel};
use crate::error::{Error, Result};
use crate::forest::{train_forest, ForestModel, ForestParams};
use crate::gbt::{train_gbt, BoostedModel, GbtParams};

pub const FORMAT_VERSION: u32 = 1;

/// Probability above which a sample is predicted high-risk.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Forest,
    Gbt,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Forest => "forest",
            ModelKind::Gbt => "gbt",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub trait Classifier: Send + Sync {
    fn feature_names(&self) -> &[String];

    fn schema_fingerprint(&self) -> &str;

    /// `P(high)` per row of `x`.
    fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>>;

    fn predict(&self, x: &Matrix) -> Result<Vec<RiskLabel>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| {
                if p > DECISION_THRESHOLD {
                    RiskLabel::High
                } else {
                    RiskLabel::Low
                }
            })
            .collect())
    }
}

pub(crate) fn check_width(expected: usize, x: &Matrix) -> Result<()> {
    if x.n_cols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.n_cols(),
        });
    }
    Ok(())
}

/// Hyperparameters of either model family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelConfig {
    Forest(ForestParams),
    Gbt(GbtParams),
}

fn as_count(name: &str, value: Option<f64>) -> Result<usize> {
    match value {
        Some(x) if x >= 0.0 && x.fract() == 0.0 => Ok(x as usize),
        _ => Err(Error::InvalidParams(format!(
            "`{name}` needs a non-negative integer, got {value:?}"
        ))),
    }
}

fn as_limit(name: &str, value: Option<f64>) -> Result<Option<usize>> {
    value.map(|_| as_count(name, value)).transpose()
}

fn as_real(name: &str, value: Option<f64>) -> Result<f64> {
    value.ok_or_else(|| Error::InvalidParams(format!("`{name}` cannot be unlimited")))
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Forest(_) => ModelKind::Forest,
            ModelConfig::Gbt(_) => ModelKind::Gbt,
        }
    }

    pub fn fit(&self, data: &LabeledDataset, seed: u64) -> Result<TrainedModel> {
        Ok(match self {
            ModelConfig::Forest(p) => TrainedModel::Forest(train_forest(data, p, seed)?),
            ModelConfig::Gbt(p) => TrainedModel::Gbt(train_gbt(data, p, seed)?),
        })
    }

    /// Sets one named hyperparameter. `None` means "unlimited" and is only
    /// meaningful for `max_depth` and `max_features`.
    pub fn set(&mut self, name: &str, value: Option<f64>) -> Result<()> {
        let family = self.kind();
        match self {
            ModelConfig::Forest(p) => match name {
                "n_trees" => p.n_trees = as_count(name, value)?,
                "bootstrap" => p.bootstrap = as_real(name, value)? != 0.0,
                "max_depth" => p.tree.max_depth = as_limit(name, value)?,
                "max_features" => p.tree.max_features = as_limit(name, value)?,
                "min_samples_split" => p.tree.min_samples_split = as_count(name, value)?,
                "min_samples_leaf" => {
                    p.tree.min_samples_leaf = as_count(name, value)?;
                    p.tree.min_samples_split =
                        p.tree.min_samples_split.max(2 * p.tree.min_samples_leaf);
                }
                _ => return Err(unknown(name, family)),
            },
            ModelConfig::Gbt(p) => match name {
                "rounds" => p.rounds = as_count(name, value)?,
                "max_depth" => p.max_depth = as_limit(name, value)?,
                "learning_rate" | "eta" => p.learning_rate = as_real(name, value)?,
                "l2_reg" | "lambda" => p.l2_reg = as_real(name, value)?,
                "min_samples_leaf" => p.min_samples_leaf = as_count(name, value)?,
                "min_child_weight" => p.min_child_weight = as_real(name, value)?,
                _ => return Err(unknown(name, family)),
            },
        }
        Ok(())
    }
}

fn unknown(name: &str, family: ModelKind) -> Error {
    Error::UnknownHyperparameter {
        name: name.to_string(),
        family: family.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrainedModel {
    Forest(ForestModel),
    Gbt(BoostedModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Forest(_) => ModelKind::Forest,
            TrainedModel::Gbt(_) => ModelKind::Gbt,
        }
    }

    pub fn as_forest(&self) -> Option<&ForestModel> {
        match self {
            TrainedModel::Forest(m) => Some(m),
            TrainedModel::Gbt(_) => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        match self {
            TrainedModel::Forest(m) => m.to_json(),
            TrainedModel::Gbt(m) => m.to_json(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            kind: ModelKind,
        }
        let header: Header = serde_json::from_str(text)?;
        Ok(match header.kind {
            ModelKind::Forest => TrainedModel::Forest(ForestModel::from_json(text)?),
            ModelKind::Gbt => TrainedModel::Gbt(BoostedModel::from_json(text)?),
        })
    }
}

impl Classifier for TrainedModel {
    fn feature_names(&self) -> &[String] {
        match self {
            TrainedModel::Forest(m) => &m.feature_names,
            TrainedModel::Gbt(m) => &m.feature_names,
        }
    }

    fn schema_fingerprint(&self) -> &str {
        match self {
            TrainedModel::Forest(m) => &m.schema_fingerprint,
            TrainedModel::Gbt(m) => &m.schema_fingerprint,
        }
    }

    fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Forest(m) => m.predict_proba(x),
            TrainedModel::Gbt(m) => m.predict_proba(x),
        }
    }
}
