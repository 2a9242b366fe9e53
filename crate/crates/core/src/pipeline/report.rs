//! CSV/JSON report tables and the output directory with its manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::importance::{
    overall_importance, rank_features, FeatureGroups, ImportanceVector, OverallImportance, RankMatrix,
};
use crate::metrics::DispersionSummary;
use crate::model::ModelKind;
use crate::transfer::{AxisKind, TransferMatrix};

use super::heatmap::render_heatmap;

/// Keeps file names portable: anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn file_stem(text: &str) -> String {
    text.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Writes files under a root directory and records their hashes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    entries: BTreeMap<String, ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(OutputDir {
            root,
            entries: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.entries.insert(
            rel.to_string(),
            ManifestEntry {
                path: rel.to_string(),
                sha256: hex::encode(Sha256::digest(bytes)),
                bytes: bytes.len(),
            },
        );
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn write_csv(
        &mut self,
        rel: &str,
        header: &[String],
        rows: &[Vec<String>],
    ) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(header)?;
        for row in rows {
            wtr.write_record(row)?;
        }
        let bytes = wtr
            .into_inner()
            .map_err(|e| Error::io(self.root.join(rel), e.into_error()))?;
        self.write(rel, &bytes)
    }

    pub fn entries(&self) -> Vec<ManifestEntry> {
        self.entries.values().cloned().collect()
    }

    /// Writes `manifest.json` listing every other file and returns the entries.
    pub fn finish(mut self) -> Result<Vec<ManifestEntry>> {
        let entries = self.entries();
        self.write_json("manifest.json", &serde_json::json!({ "files": entries }))?;
        Ok(entries)
    }
}

pub(crate) fn fmt_opt(value: Option<f64>, digits: usize) -> String {
    value.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

pub(crate) fn strings<const N: usize>(items: [&str; N]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn write_dispersion(out: &mut OutputDir, rel: &str, summary: &DispersionSummary) -> Result<()> {
    let mut rows = Vec::new();
    for (axis, list) in [("hazard", &summary.per_hazard), ("county", &summary.per_county)] {
        for d in list {
            rows.push(vec![
                axis.to_string(),
                d.name.clone(),
                d.n_present.to_string(),
                format!("{:.6}", d.mean),
                format!("{:.6}", d.std),
            ]);
        }
    }
    rows.push(vec![
        "summary".into(),
        "mean_inter_county_std".into(),
        String::new(),
        String::new(),
        format!("{:.6}", summary.mean_inter_county_std),
    ]);
    rows.push(vec![
        "summary".into(),
        "mean_inter_hazard_std".into(),
        String::new(),
        String::new(),
        format!("{:.6}", summary.mean_inter_hazard_std),
    ]);
    out.write_csv(rel, &strings(["axis", "name", "n_present", "mean", "std"]), &rows)
}

/// Per-hazard importance outputs: per-county normalized importance and
/// ranks, the overall score with its top-k selection, and group shares of
/// the selection overall and per county.
pub fn write_importance(
    out: &mut OutputDir,
    hazard: &str,
    per_county: &[(String, ImportanceVector)],
    groups: &FeatureGroups,
    top_k: usize,
) -> Result<OverallImportance> {
    let names = per_county[0].1.feature_names.clone();
    let mut ranks = RankMatrix::new(names.clone());
    for (county, v) in per_county {
        ranks.push_county(county.clone(), &v.normalized)?;
    }
    let overall = overall_importance(&ranks, top_k)?;
    let stem = file_stem(hazard);

    let mut header = strings(["feature", "group"]);
    for (county, _) in per_county {
        header.push(format!("importance_{county}"));
    }
    for (county, _) in per_county {
        header.push(format!("rank_{county}"));
    }
    let rows: Vec<Vec<String>> = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut row = vec![name.clone(), groups.group_of(name).to_string()];
            row.extend(per_county.iter().map(|(_, v)| format!("{:.8}", v.normalized[j])));
            row.extend(ranks.ranks.iter().map(|r| format!("{}", r[j])));
            row
        })
        .collect();
    out.write_csv(&format!("importance/{stem}__by_county.csv"), &header, &rows)?;

    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| overall.scores[b].total_cmp(&overall.scores[a]).then(a.cmp(&b)));
    let rows: Vec<Vec<String>> = order
        .iter()
        .enumerate()
        .map(|(pos, &j)| {
            vec![
                (pos + 1).to_string(),
                names[j].clone(),
                groups.group_of(&names[j]).to_string(),
                format!("{:.8}", overall.scores[j]),
                overall.top.contains(&j).to_string(),
            ]
        })
        .collect();
    out.write_csv(
        &format!("importance/{stem}__overall.csv"),
        &strings(["position", "feature", "group", "score", "selected"]),
        &rows,
    )?;

    let mut rows = Vec::new();
    for share in groups.rollup(overall.top_names()) {
        rows.push(vec![
            "overall".into(),
            share.group,
            share.count.to_string(),
            format!("{:.6}", share.share),
        ]);
    }
    for (county, v) in per_county {
        let county_ranks = rank_features(&v.normalized);
        let single = RankMatrix {
            feature_names: names.clone(),
            counties: vec![county.clone()],
            ranks: vec![county_ranks],
        };
        let top = overall_importance(&single, top_k)?;
        for share in groups.rollup(top.top_names()) {
            rows.push(vec![
                county.clone(),
                share.group,
                share.count.to_string(),
                format!("{:.6}", share.share),
            ]);
        }
    }
    out.write_csv(
        &format!("importance/{stem}__groups.csv"),
        &strings(["scope", "group", "count", "share"]),
        &rows,
    )?;
    Ok(overall)
}

pub fn transfer_stem(matrix: &TransferMatrix) -> String {
    let (axis, name) = match &matrix.kind {
        AxisKind::CrossCounty { hazard } => ("cross_county", hazard),
        AxisKind::CrossHazard { county } => ("cross_hazard", county),
    };
    format!("transfer/{axis}__{}__{}", file_stem(name), matrix.baseline.as_str())
}

pub fn write_transfer(out: &mut OutputDir, matrix: &TransferMatrix) -> Result<()> {
    let stem = transfer_stem(matrix);
    let mut csv = Vec::new();
    matrix.write_csv(&mut csv)?;
    out.write(&format!("{stem}.csv"), &csv)?;
    out.write(&format!("{stem}.svg"), render_heatmap(matrix)?.as_bytes())
}

/// Mean test F per hazard and model family over counties with results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub hazard: String,
    pub family: ModelKind,
    pub n_counties: usize,
    pub mean_f1: Option<f64>,
    pub mean_f_beta: Option<f64>,
}

pub fn write_comparison(out: &mut OutputDir, rows: &[ModelComparison]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|c| {
            vec![
                c.hazard.clone(),
                c.family.to_string(),
                c.n_counties.to_string(),
                fmt_opt(c.mean_f1.map(|v| 100.0 * v), 2),
                fmt_opt(c.mean_f_beta.map(|v| 100.0 * v), 2),
            ]
        })
        .collect();
    out.write_csv(
        "model_comparison.csv",
        &strings(["hazard", "family", "n_counties", "mean_f1_pct", "mean_f_beta_pct"]),
        &rows,
    )
}
