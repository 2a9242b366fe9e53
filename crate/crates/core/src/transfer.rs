//! Cross-county and cross-hazard transferability of frozen models.
//!
//! A cell compares a model applied outside its training domain against a
//! baseline on the same evaluation rows. The difference is expressed in
//! F-score percentage points; a model transfers when it loses no more than
//! the policy threshold (15 points by default, inclusive).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metrics::{confusion, f_beta};
use crate::model::Classifier;

pub const DEFAULT_THRESHOLD_POINTS: f64 = -15.0;

/// What a transferred model is compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// The model trained and tested on the target.
    #[default]
    TargetNative,
    /// The source model on its own evaluation rows.
    SourceNative,
}

impl Baseline {
    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::TargetNative => "target_native",
            Baseline::SourceNative => "source_native",
        }
    }
}

/// Which rows of the target a transferred model is scored on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationSet {
    #[default]
    TestSplit,
    FullDataset,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferPolicy {
    /// Inclusive lower bound on ΔF in percentage points; must be negative.
    pub threshold_points: f64,
    pub beta: f64,
    pub baseline: Baseline,
    pub evaluation: EvaluationSet,
}

impl Default for TransferPolicy {
    fn default() -> Self {
        TransferPolicy {
            threshold_points: DEFAULT_THRESHOLD_POINTS,
            beta: 1.5,
            baseline: Baseline::TargetNative,
            evaluation: EvaluationSet::TestSplit,
        }
    }
}

impl TransferPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_points < 0.0) {
            return Err(Error::InvalidParams(format!(
                "transfer threshold must be negative, got {}",
                self.threshold_points
            )));
        }
        Ok(())
    }
}

pub fn classify(delta_points: f64, policy: &TransferPolicy) -> bool {
    delta_points >= policy.threshold_points
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum AxisKind {
    /// Rows and columns are counties; the hazard is fixed.
    CrossCounty { hazard: String },
    /// Rows and columns are hazards; the county is fixed.
    CrossHazard { county: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferCell {
    /// F-beta of the source model on the target's evaluation rows.
    pub transferred: f64,
    pub baseline: f64,
    /// `100 · (transferred - baseline)`
    pub delta_points: f64,
    pub transferable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub kind: AxisKind,
    pub baseline: Baseline,
    pub labels: Vec<String>,
    /// `cells[source][target]`; `None` when either side is unavailable.
    pub cells: Vec<Vec<Option<TransferCell>>>,
}

impl TransferMatrix {
    pub fn cell(&self, source: usize, target: usize) -> Option<&TransferCell> {
        self.cells[source][target].as_ref()
    }

    pub fn off_diagonal(&self) -> impl Iterator<Item = &TransferCell> {
        self.cells.iter().enumerate().flat_map(|(s, row)| {
            row.iter()
                .enumerate()
                .filter(move |(t, _)| *t != s)
                .filter_map(|(_, c)| c.as_ref())
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Long format: one row per (source, target) pair.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "source",
            "target",
            "transferred_f",
            "baseline_f",
            "delta_points",
            "transferable",
        ])?;
        for (s, row) in self.cells.iter().enumerate() {
            for (t, cell) in row.iter().enumerate() {
                let mut record = vec![self.labels[s].clone(), self.labels[t].clone()];
                match cell {
                    Some(c) => record.extend([
                        format!("{:.6}", c.transferred),
                        format!("{:.6}", c.baseline),
                        format!("{:.4}", c.delta_points),
                        c.transferable.to_string(),
                    ]),
                    None => record.extend(["", "", "", "absent"].map(String::from)),
                }
                wtr.write_record(&record)?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<transfer csv>", e))?;
        Ok(())
    }
}

/// One side of a transfer experiment: a trained model and the rows it is
/// evaluated on. Either may be missing (e.g. hazard data unavailable).
pub struct Participant<'a> {
    pub name: String,
    pub model: Option<&'a dyn Classifier>,
    pub eval: Option<&'a LabeledDataset>,
}

/// F-beta of `model` on `data`; `None` when undefined (no positives at all).
pub fn score(model: &dyn Classifier, data: &LabeledDataset, beta: f64) -> Result<Option<f64>> {
    if model.schema_fingerprint() != data.schema.fingerprint() {
        let column = model
            .feature_names()
            .iter()
            .zip(data.schema.names())
            .find(|(a, b)| a != b)
            .map(|(a, _)| a.clone())
            .unwrap_or_else(|| "<feature count>".into());
        return Err(Error::SchemaMismatch {
            county: data.county_id.clone(),
            column,
        });
    }
    let predicted = model.predict(&data.features)?;
    match f_beta(&confusion(&data.labels, &predicted)?, beta) {
        Ok(f) => Ok(Some(f)),
        Err(Error::NoPositives) => Ok(None),
        Err(e) => Err(e),
    }
}

fn build(kind: AxisKind, participants: &[Participant<'_>], policy: &TransferPolicy) -> Result<TransferMatrix> {
    policy.validate()?;
    let n = participants.len();
    let present = participants
        .iter()
        .filter(|p| p.model.is_some() && p.eval.is_some())
        .count();
    if present < 2 {
        return Err(Error::NoEntries(format!(
            "transfer needs at least two participants with data, found {present}"
        )));
    }

    // native[i]: model i on its own evaluation rows
    let native = participants
        .iter()
        .map(|p| match (p.model, p.eval) {
            (Some(m), Some(d)) => score(m, d, policy.beta),
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = vec![vec![None; n]; n];
    for (s, source) in participants.iter().enumerate() {
        let (Some(model), Some(_)) = (source.model, source.eval) else {
            continue;
        };
        for (t, target) in participants.iter().enumerate() {
            let Some(eval) = target.eval else { continue };
            if target.model.is_none() {
                continue;
            }
            let transferred = if s == t {
                native[s]
            } else {
                score(model, eval, policy.beta)?
            };
            let baseline = match policy.baseline {
                Baseline::TargetNative => native[t],
                Baseline::SourceNative => native[s],
            };
            let (Some(transferred), Some(baseline)) = (transferred, baseline) else {
                continue;
            };
            let delta_points = if s == t {
                0.0
            } else {
                100.0 * (transferred - baseline)
            };
            cells[s][t] = Some(TransferCell {
                transferred,
                baseline,
                delta_points,
                transferable: classify(delta_points, policy),
            });
        }
    }
    Ok(TransferMatrix {
        kind,
        baseline: policy.baseline,
        labels: participants.iter().map(|p| p.name.clone()).collect(),
        cells,
    })
}

/// Counties × counties for one hazard: cell (A, B) applies A's model to B.
pub fn cross_county(
    hazard: &str,
    counties: &[Participant<'_>],
    policy: &TransferPolicy,
) -> Result<TransferMatrix> {
    build(
        AxisKind::CrossCounty {
            hazard: hazard.to_string(),
        },
        counties,
        policy,
    )
}

/// Hazards × hazards within one county: cell (g, h) applies the hazard-g
/// model to the hazard-h labels.
pub fn cross_hazard(
    county: &str,
    hazards: &[Participant<'_>],
    policy: &TransferPolicy,
) -> Result<TransferMatrix> {
    build(
        AxisKind::CrossHazard {
            county: county.to_string(),
        },
        hazards,
        policy,
    )
}
