use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    // dataset
    #[error("missing column `{column}`")]
    MissingColumn { column: String },
    #[error("non-numeric cell {value:?} at row {row}, column `{column}`")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("missing feature value at row {row}, column `{column}`")]
    MissingFeatureValue { row: usize, column: String },
    #[error("duplicate tract id `{tract_id}`")]
    DuplicateTract { tract_id: String },
    #[error("schema mismatch in county `{county}` at column `{column}`")]
    SchemaMismatch { county: String, column: String },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("empty exposure vector")]
    EmptyVector,
    #[error("non-finite exposure value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("hazard `{hazard}` is absent for county `{county}`")]
    HazardAbsent { county: String, hazard: String },
    #[error("degenerate labels: only one class present ({context})")]
    DegenerateLabels { context: String },

    // trees and ensembles
    #[error("class distribution has no samples")]
    EmptyDistribution,
    #[error("cannot grow a tree on an empty subset")]
    EmptySubset,
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    // selection
    #[error("class `{class}` has {count} members, at least 2 required")]
    ClassTooSmall { class: String, count: usize },
    #[error("too few samples: {n} rows for {k} folds")]
    TooFewSamples { n: usize, k: usize },
    #[error("unknown hyperparameter `{name}` for {family}")]
    UnknownHyperparameter { name: String, family: String },

    // metrics
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("F-score undefined: no positive labels and no positive predictions")]
    NoPositives,
    #[error("no entries present for `{0}`")]
    NoEntries(String),

    // importance
    #[error("all importances are zero (no splits were made)")]
    AllZeroImportance,
    #[error("importance total {total} is negative; cannot normalize")]
    NegativeImportanceTotal { total: f64 },

    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("cannot render an empty matrix")]
    EmptyMatrix,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{county}/{hazard}: {source}")]
    Job {
        county: String,
        hazard: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_job(self, county: &str, hazard: &str) -> Self {
        Error::Job {
            county: county.to_string(),
            hazard: hazard.to_string(),
            source: Box::new(self),
        }
    }

    /// Errors caused by bad input or configuration rather than by a failed
    /// computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidSpec(_)
                | Error::InvalidParams(_)
                | Error::InvalidSchema(_)
                | Error::MissingColumn { .. }
                | Error::NonNumericCell { .. }
                | Error::MissingFeatureValue { .. }
                | Error::DuplicateTract { .. }
                | Error::SchemaMismatch { .. }
                | Error::UnknownHyperparameter { .. }
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
