//! County datasets: CSV ingestion, schema alignment and mean-threshold labeling.
//!
//! A county file is a UTF-8 CSV with a `tract_id` key column, any number of
//! `hazard__<id>` exposure columns, and every other column treated as a
//! numeric feature. Hazard cells may be empty (missing for that tract);
//! feature cells may not, unless median imputation is requested.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TRACT_ID_COLUMN: &str = "tract_id";
pub const HAZARD_PREFIX: &str = "hazard__";

/// Binary risk class. `High` is the positive class everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskLabel {
    Low,
    High,
}

impl RiskLabel {
    /// Position of this class in two-element count and probability arrays.
    pub const fn index(self) -> usize {
        match self {
            RiskLabel::Low => 0,
            RiskLabel::High => 1,
        }
    }

    pub const fn from_index(index: usize) -> Self {
        if index == 0 {
            RiskLabel::Low
        } else {
            RiskLabel::High
        }
    }
}

impl fmt::Display for RiskLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskLabel::Low => "low",
            RiskLabel::High => "high",
        })
    }
}

/// Ordered, unique feature names shared by every county in a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureSchema {
    names: Vec<String>,
}

impl FeatureSchema {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(Error::InvalidSchema(format!(
                "at least 2 features required, got {}",
                names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if name == TRACT_ID_COLUMN || name.starts_with(HAZARD_PREFIX) {
                return Err(Error::InvalidSchema(format!(
                    "`{name}` is reserved and cannot be a feature"
                )));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate feature `{name}`")));
            }
        }
        Ok(FeatureSchema { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Hex SHA-256 over the ordered names; models carry it so that a model is
    /// never applied to a differently ordered feature matrix.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for name in &self.names {
            hasher.update(name.as_bytes());
            hasher.update([0u8]);
        }
        hex::encode(hasher.finalize())
    }
}

impl TryFrom<Vec<String>> for FeatureSchema {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        FeatureSchema::new(names)
    }
}

impl From<FeatureSchema> for Vec<String> {
    fn from(schema: FeatureSchema) -> Self {
        schema.names
    }
}

/// Dense row-major matrix of feature values.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: n_rows * n_cols,
            });
        }
        Ok(Matrix {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            n_rows: rows.len(),
            n_cols,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, col)).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            n_rows: indices.len(),
            n_cols: self.n_cols,
            data,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TractRecord {
    pub tract_id: String,
    pub features: Vec<f64>,
}

/// One county's tracts: features plus raw hazard exposures.
///
/// Hazard vectors share the row order of `rows`; `None` marks a tract whose
/// exposure for that hazard is unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct CountyDataset {
    county_id: String,
    schema: FeatureSchema,
    rows: Vec<TractRecord>,
    hazards: BTreeMap<String, Vec<Option<f64>>>,
}

impl CountyDataset {
    pub fn new(
        county_id: impl Into<String>,
        schema: FeatureSchema,
        rows: Vec<TractRecord>,
        hazards: BTreeMap<String, Vec<Option<f64>>>,
    ) -> Result<Self> {
        let f = schema.len();
        let mut seen = HashSet::with_capacity(rows.len());
        for row in &rows {
            if row.features.len() != f {
                return Err(Error::DimensionMismatch {
                    expected: f,
                    found: row.features.len(),
                });
            }
            if !seen.insert(row.tract_id.as_str()) {
                return Err(Error::DuplicateTract {
                    tract_id: row.tract_id.clone(),
                });
            }
        }
        for values in hazards.values() {
            if values.len() != rows.len() {
                return Err(Error::LengthMismatch {
                    left: values.len(),
                    right: rows.len(),
                });
            }
        }
        Ok(CountyDataset {
            county_id: county_id.into(),
            schema,
            rows,
            hazards,
        })
    }

    pub fn county_id(&self) -> &str {
        &self.county_id
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[TractRecord] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn hazard_ids(&self) -> impl Iterator<Item = &str> {
        self.hazards.keys().map(String::as_str)
    }

    pub fn hazard(&self, hazard_id: &str) -> Option<&[Option<f64>]> {
        self.hazards.get(hazard_id).map(Vec::as_slice)
    }

    /// A hazard counts as present when its column exists and holds at least
    /// one value.
    pub fn has_hazard(&self, hazard_id: &str) -> bool {
        self.hazard(hazard_id)
            .is_some_and(|values| values.iter().any(Option::is_some))
    }

    pub fn feature_matrix(&self) -> Matrix {
        let f = self.schema.len();
        let mut data = Vec::with_capacity(self.rows.len() * f);
        for row in &self.rows {
            data.extend_from_slice(&row.features);
        }
        Matrix {
            n_rows: self.rows.len(),
            n_cols: f,
            data,
        }
    }

    /// Reorders feature columns to `target`, which must hold the same names.
    pub fn reindex_features(&mut self, target: &FeatureSchema) -> Result<()> {
        if self.schema == *target {
            return Ok(());
        }
        let mut permutation = Vec::with_capacity(target.len());
        for name in target.names() {
            match self.schema.index_of(name) {
                Some(i) => permutation.push(i),
                None => {
                    return Err(Error::SchemaMismatch {
                        county: self.county_id.clone(),
                        column: name.clone(),
                    })
                }
            }
        }
        if let Some(extra) = self
            .schema
            .names()
            .iter()
            .find(|name| target.index_of(name).is_none())
        {
            return Err(Error::SchemaMismatch {
                county: self.county_id.clone(),
                column: extra.clone(),
            });
        }
        for row in &mut self.rows {
            row.features = permutation.iter().map(|&i| row.features[i]).collect();
        }
        self.schema = target.clone();
        Ok(())
    }
}

/// How to treat tracts whose exposure for the requested hazard is missing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingHazardPolicy {
    /// Drop the tract for that hazard only.
    #[default]
    Drop,
    Error,
}

/// How to treat missing feature cells on load.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingFeaturePolicy {
    #[default]
    Strict,
    /// Fill empty / `NA` cells with the column median.
    MedianImpute,
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// County id; defaults to the file stem.
    pub county_id: Option<String>,
    /// Explicit canonical schema; inferred from the header when absent.
    pub schema: Option<FeatureSchema>,
    pub missing_features: MissingFeaturePolicy,
}

fn is_missing_marker(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "N/A" | "na" | "n/a" | "NaN" | "nan" | "null")
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericCell {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

pub fn load_county_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<CountyDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut opts = opts.clone();
    if opts.county_id.is_none() {
        opts.county_id = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    read_county_csv(file, &opts)
}

pub fn read_county_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<CountyDataset> {
    let county_id = opts.county_id.clone().unwrap_or_else(|| "county".into());
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();

    let key_col = headers
        .iter()
        .position(|h| h == TRACT_ID_COLUMN)
        .ok_or_else(|| Error::MissingColumn {
            column: TRACT_ID_COLUMN.into(),
        })?;
    let mut hazard_cols: Vec<(String, usize)> = Vec::new();
    let mut feature_cols: Vec<(String, usize)> = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if i == key_col {
            continue;
        }
        if let Some(id) = h.strip_prefix(HAZARD_PREFIX) {
            hazard_cols.push((id.to_string(), i));
        } else {
            feature_cols.push((h.to_string(), i));
        }
    }

    let (schema, feature_cols) = match &opts.schema {
        Some(schema) => {
            let mut cols = Vec::with_capacity(schema.len());
            for name in schema.names() {
                let idx = feature_cols
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|&(_, i)| i)
                    .ok_or_else(|| Error::MissingColumn {
                        column: name.clone(),
                    })?;
                cols.push(idx);
            }
            (schema.clone(), cols)
        }
        None => {
            let schema = FeatureSchema::new(feature_cols.iter().map(|(n, _)| n.clone()))?;
            (schema, feature_cols.iter().map(|&(_, i)| i).collect())
        }
    };

    let impute = opts.missing_features == MissingFeaturePolicy::MedianImpute;
    let mut rows = Vec::new();
    let mut raw_features: Vec<Vec<Option<f64>>> = Vec::new();
    let mut hazards: BTreeMap<String, Vec<Option<f64>>> = hazard_cols
        .iter()
        .map(|(id, _)| (id.clone(), Vec::new()))
        .collect();

    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        let tract_id = record.get(key_col).unwrap_or("").to_string();
        let mut values = Vec::with_capacity(feature_cols.len());
        for (k, &col) in feature_cols.iter().enumerate() {
            let cell = record.get(col).unwrap_or("");
            let name = &schema.names()[k];
            if cell.is_empty() && !impute {
                return Err(Error::MissingFeatureValue {
                    row: row_no,
                    column: name.clone(),
                });
            }
            if impute && is_missing_marker(cell) {
                values.push(None);
            } else {
                values.push(Some(parse_cell(cell, row_no, name)?));
            }
        }
        for (id, col) in &hazard_cols {
            let cell = record.get(*col).unwrap_or("");
            let value = if is_missing_marker(cell) {
                None
            } else {
                Some(parse_cell(cell, row_no, &format!("{HAZARD_PREFIX}{id}"))?)
            };
            hazards.get_mut(id).expect("hazard column registered").push(value);
        }
        raw_features.push(values);
        rows.push(tract_id);
    }

    let medians: Vec<f64> = if impute {
        (0..schema.len())
            .map(|j| {
                let mut present: Vec<f64> = raw_features.iter().filter_map(|r| r[j]).collect();
                median(&mut present)
            })
            .collect()
    } else {
        Vec::new()
    };
    let records = rows
        .into_iter()
        .zip(raw_features)
        .map(|(tract_id, values)| TractRecord {
            tract_id,
            features: values
                .into_iter()
                .enumerate()
                .map(|(j, v)| v.unwrap_or_else(|| medians[j]))
                .collect(),
        })
        .collect();
    CountyDataset::new(county_id, schema, records, hazards)
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 0 {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    }
}

/// Writes features then hazards (sorted by id); reals use the shortest
/// round-trip representation so load → write → load is byte stable.
pub fn write_county_csv<W: Write>(dataset: &CountyDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![TRACT_ID_COLUMN.to_string()];
    header.extend(dataset.schema.names().iter().cloned());
    header.extend(dataset.hazards.keys().map(|id| format!("{HAZARD_PREFIX}{id}")));
    wtr.write_record(&header)?;
    for (i, row) in dataset.rows.iter().enumerate() {
        let mut record = Vec::with_capacity(header.len());
        record.push(row.tract_id.clone());
        record.extend(row.features.iter().map(f64::to_string));
        for values in dataset.hazards.values() {
            record.push(values[i].map(|v| v.to_string()).unwrap_or_default());
        }
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_county_csv(dataset: &CountyDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_county_csv(dataset, std::io::BufWriter::new(file))
}

/// Checks that every dataset carries the same feature names and reorders
/// columns to the first dataset's order.
pub fn align_schemas(datasets: &mut [CountyDataset]) -> Result<FeatureSchema> {
    let canonical = datasets
        .first()
        .map(|d| d.schema.clone())
        .ok_or_else(|| Error::Config("align_schemas needs at least one dataset".into()))?;
    for dataset in datasets.iter_mut().skip(1) {
        dataset.reindex_features(&canonical)?;
    }
    Ok(canonical)
}

/// Labels a value high-risk iff it is strictly greater than the mean.
pub fn binarize(exposure: &[f64]) -> Result<(Vec<RiskLabel>, f64)> {
    if exposure.is_empty() {
        return Err(Error::EmptyVector);
    }
    if let Some(index) = exposure.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    let mean = exposure.iter().sum::<f64>() / exposure.len() as f64;
    let labels = exposure
        .iter()
        .map(|&v| if v > mean { RiskLabel::High } else { RiskLabel::Low })
        .collect();
    Ok((labels, mean))
}

/// Feature matrix plus binary labels for one (county, hazard) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub county_id: String,
    pub hazard_id: String,
    pub schema: FeatureSchema,
    pub tract_ids: Vec<String>,
    pub features: Matrix,
    pub labels: Vec<RiskLabel>,
    /// Mean exposure used as the high/low cut.
    pub threshold: f64,
}

impl LabeledDataset {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    /// Counts indexed by [`RiskLabel::index`].
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0usize; 2];
        for label in &self.labels {
            counts[label.index()] += 1;
        }
        counts
    }

    pub fn prevalence(&self) -> f64 {
        self.class_counts()[RiskLabel::High.index()] as f64 / self.n_rows().max(1) as f64
    }

    pub fn require_both_classes(&self) -> Result<()> {
        let counts = self.class_counts();
        if counts[0] == 0 || counts[1] == 0 {
            return Err(Error::DegenerateLabels {
                context: format!(
                    "{}/{}: {} low, {} high",
                    self.county_id, self.hazard_id, counts[0], counts[1]
                ),
            });
        }
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            county_id: self.county_id.clone(),
            hazard_id: self.hazard_id.clone(),
            schema: self.schema.clone(),
            tract_ids: indices.iter().map(|&i| self.tract_ids[i].clone()).collect(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            threshold: self.threshold,
        }
    }

    /// Row indices ordered by tract id. Sampling always draws over this order
    /// so results do not depend on file row order.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n_rows()).collect();
        order.sort_by(|&a, &b| self.tract_ids[a].cmp(&self.tract_ids[b]));
        order
    }
}

/// Binarizes one hazard of a county at its mean exposure.
pub fn make_labeled(
    dataset: &CountyDataset,
    hazard_id: &str,
    policy: MissingHazardPolicy,
) -> Result<LabeledDataset> {
    if !dataset.has_hazard(hazard_id) {
        return Err(Error::HazardAbsent {
            county: dataset.county_id.clone(),
            hazard: hazard_id.to_string(),
        });
    }
    let values = dataset.hazard(hazard_id).expect("checked above");
    let mut keep = Vec::with_capacity(values.len());
    let mut exposure = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        match (v, policy) {
            (Some(v), _) => {
                keep.push(i);
                exposure.push(*v);
            }
            (None, MissingHazardPolicy::Drop) => {}
            (None, MissingHazardPolicy::Error) => {
                return Err(Error::NonNumericCell {
                    row: i + 1,
                    column: format!("{HAZARD_PREFIX}{hazard_id}"),
                    value: String::new(),
                })
            }
        }
    }
    let (labels, threshold) = binarize(&exposure)?;
    let all = dataset.feature_matrix();
    let labeled = LabeledDataset {
        county_id: dataset.county_id.clone(),
        hazard_id: hazard_id.to_string(),
        schema: dataset.schema.clone(),
        tract_ids: keep.iter().map(|&i| dataset.rows[i].tract_id.clone()).collect(),
        features: all.select_rows(&keep),
        labels,
        threshold,
    };
    labeled.require_both_classes()?;
    Ok(labeled)
}
