use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cart::ImportanceFormula;
use crate::dataset::{MissingFeaturePolicy, MissingHazardPolicy};
use crate::error::{Error, Result};
use crate::importance::DEFAULT_TOP_K;
use crate::model::ModelKind;
use crate::selection::{HyperValue, ParamGrid};
use crate::synth::{self, ScenarioSpec};
use crate::transfer::{Baseline, EvaluationSet, TransferPolicy, DEFAULT_THRESHOLD_POINTS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Synth6x3,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synth6x3" => Ok(Preset::Synth6x3),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineChoice {
    #[default]
    TargetNative,
    SourceNative,
    Both,
}

impl BaselineChoice {
    pub fn baselines(self) -> Vec<Baseline> {
        match self {
            BaselineChoice::TargetNative => vec![Baseline::TargetNative],
            BaselineChoice::SourceNative => vec![Baseline::SourceNative],
            BaselineChoice::Both => vec![Baseline::TargetNative, Baseline::SourceNative],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferConfig {
    pub threshold_points: f64,
    pub baseline: BaselineChoice,
    pub evaluation: EvaluationSet,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            threshold_points: DEFAULT_THRESHOLD_POINTS,
            baseline: BaselineChoice::TargetNative,
            evaluation: EvaluationSet::TestSplit,
        }
    }
}

impl TransferConfig {
    pub fn policies(&self, beta: f64) -> Vec<TransferPolicy> {
        self.baseline
            .baselines()
            .into_iter()
            .map(|baseline| TransferPolicy {
                threshold_points: self.threshold_points,
                beta,
                baseline,
                evaluation: self.evaluation,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub k: usize,
    /// `None` picks the default grid for the data source.
    pub forest_grid: Option<ParamGrid>,
    pub gbt_grid: Option<ParamGrid>,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 10,
            forest_grid: None,
            gbt_grid: None,
        }
    }
}

/// Smaller grids used by the synthetic preset to keep a full run short.
pub fn preset_forest_grid() -> ParamGrid {
    ParamGrid::default()
        .with("n_trees", [HyperValue::num(50.0)])
        .with("max_depth", [HyperValue::UNLIMITED, HyperValue::num(8.0)])
        .with("min_samples_leaf", [HyperValue::num(1.0), HyperValue::num(5.0)])
}

pub fn preset_gbt_grid() -> ParamGrid {
    ParamGrid::default()
        .with("rounds", [HyperValue::num(50.0)])
        .with("max_depth", [HyperValue::num(3.0)])
        .with("learning_rate", [HyperValue::num(0.1), HyperValue::num(0.3)])
}

/// A whole experiment. Exactly one data source must be given: CSV files,
/// a preset, or explicit synthetic scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub counties: Vec<PathBuf>,
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioSpec>,
    /// Hazard ids in report order; empty means every hazard found.
    #[serde(default)]
    pub hazards: Vec<String>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default = "default_families")]
    pub families: Vec<ModelKind>,
    #[serde(default)]
    pub importance: ImportanceFormula,
    #[serde(default)]
    pub transfer: TransferConfig,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub missing_features: MissingFeaturePolicy,
    #[serde(default)]
    pub missing_hazard: MissingHazardPolicy,
    /// Optional `feature,group` CSV; synthetic runs use the built-in catalog.
    #[serde(default)]
    pub feature_groups: Option<PathBuf>,
}

fn default_beta() -> f64 {
    1.5
}

fn default_train_fraction() -> f64 {
    0.7
}

fn default_families() -> Vec<ModelKind> {
    vec![ModelKind::Forest, ModelKind::Gbt]
}

fn default_top_k() -> usize {
    DEFAULT_TOP_K
}

fn default_out() -> PathBuf {
    PathBuf::from("hazardscope-out")
}

impl RunConfig {
    pub fn preset(preset: Preset, seed: u64) -> Self {
        let mut config: RunConfig =
            serde_json::from_value(serde_json::json!({ "seed": seed })).expect("defaults");
        config.preset = Some(preset);
        config
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let sources = [
            !self.counties.is_empty(),
            self.preset.is_some(),
            !self.scenarios.is_empty(),
        ];
        if sources.iter().filter(|s| **s).count() != 1 {
            return bad("give exactly one of `counties`, `preset`, `scenarios`".into());
        }
        for path in &self.counties {
            if !path.is_file() {
                return bad(format!("county file `{}` does not exist", path.display()));
            }
        }
        if let Some(path) = &self.feature_groups {
            if !path.is_file() {
                return bad(format!("feature group file `{}` does not exist", path.display()));
            }
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction must be in (0, 1), got {}", self.train_fraction));
        }
        if self.cv.k < 2 {
            return bad(format!("cv.k must be at least 2, got {}", self.cv.k));
        }
        if !self.families.contains(&ModelKind::Forest) {
            return bad("`families` must include forest".into());
        }
        if self.top_k == 0 {
            return bad("top_k must be positive".into());
        }
        if !(self.transfer.threshold_points < 0.0) {
            return bad("transfer.threshold_points must be negative".into());
        }
        for spec in &self.scenarios {
            spec.validate()?;
        }
        Ok(())
    }

    pub fn is_synthetic(&self) -> bool {
        self.preset.is_some() || !self.scenarios.is_empty()
    }

    pub fn scenario_specs(&self) -> Vec<ScenarioSpec> {
        match self.preset {
            Some(Preset::Synth6x3) => synth::synth6x3(self.seed),
            None => self.scenarios.clone(),
        }
    }

    pub fn hazard_order(&self) -> Vec<String> {
        if self.hazards.is_empty() && self.preset == Some(Preset::Synth6x3) {
            return synth::SYNTH6X3_HAZARDS.iter().map(|s| s.to_string()).collect();
        }
        self.hazards.clone()
    }

    pub fn forest_grid(&self) -> ParamGrid {
        self.cv.forest_grid.clone().unwrap_or_else(|| {
            if self.preset.is_some() {
                preset_forest_grid()
            } else {
                ParamGrid::default_forest()
            }
        })
    }

    pub fn gbt_grid(&self) -> ParamGrid {
        self.cv.gbt_grid.clone().unwrap_or_else(|| {
            if self.preset.is_some() {
                preset_gbt_grid()
            } else {
                ParamGrid::default_gbt()
            }
        })
    }

    /// The config with defaults filled in, as written next to the outputs.
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        c.cv.forest_grid = Some(self.forest_grid());
        c.cv.gbt_grid = Some(self.gbt_grid());
        c.hazards = self.hazard_order();
        c
    }
}

/// Applies `key=value` overrides to a config document. Keys may be dotted
/// (`transfer.baseline`); values are parsed as JSON, falling back to a plain
/// string.
pub fn apply_overrides(doc: &mut Value, overrides: &[(String, String)]) -> Result<()> {
    for (key, raw) in overrides {
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
        let mut node = &mut *doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(Error::Config(format!("bad override key `{key}`")));
            }
            let Value::Object(map) = node else {
                return Err(Error::Config(format!("`{key}` does not name an object field")));
            };
            if i + 1 == parts.len() {
                map.insert(part.to_string(), value.clone());
                break;
            }
            node = map
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(())
}

pub fn parse_override(text: &str) -> Result<(String, String)> {
    text.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.to_string()))
        .ok_or_else(|| Error::Config(format!("override `{text}` is not key=value")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_mandatory() {
        assert!(RunConfig::from_json(r#"{"preset":"synth6x3"}"#).is_err());
        let c = RunConfig::from_json(r#"{"preset":"synth6x3","seed":3}"#).unwrap();
        assert_eq!(c.beta, 1.5);
        assert_eq!(c.top_k, 7);
        c.validate().unwrap();
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let mut doc = serde_json::json!({"seed": 1, "preset": "synth6x3"});
        apply_overrides(
            &mut doc,
            &[
                parse_override("transfer.baseline=both").unwrap(),
                parse_override("beta=1").unwrap(),
            ],
        )
        .unwrap();
        let c = RunConfig::from_value(doc).unwrap();
        assert_eq!(c.transfer.baseline, BaselineChoice::Both);
        assert_eq!(c.beta, 1.0);
    }

    #[test]
    fn missing_county_file_is_rejected() {
        let c = RunConfig::from_json(r#"{"seed":1,"counties":["/nonexistent/x.csv"]}"#).unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
