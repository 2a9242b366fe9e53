//! End-to-end experiment: per (county, hazard) split, cross-validate, refit
//! and score each model family, then aggregate metrics, dispersion,
//! importance and transferability into a report directory.
//!
//! The forest is the reference model for importance, dispersion and
//! transfer; the boosted model only appears in the model comparison.
//!
//! Every output is a pure function of the config and seed. Written copies
//! of the config drop `out` and `workers`, so neither the output location
//! nor the thread count changes any file hash.

pub mod config;
pub mod heatmap;
pub mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::ImportanceFormula;
use crate::dataset::{
    align_schemas, load_county_csv, make_labeled, write_county_csv, CountyDataset, LabeledDataset,
    LoadOptions,
};
use crate::error::{Error, Result};
use crate::importance::{FeatureGroups, ImportanceVector, OverallImportance};
use crate::metrics::{confusion, dispersion_summary, f_beta, Confusion, DispersionSummary, MetricTable};
use crate::model::{Classifier, ModelConfig, ModelKind, TrainedModel};
use crate::rng::derive_seed;
use crate::selection::{
    base_config, cross_validate, describe_point, stratified_split, CvSpec, SplitSpec, TestSplit,
};
use crate::synth::{self, ScenarioSpec};
use crate::transfer::{self, EvaluationSet, Participant, TransferMatrix, TransferPolicy};

pub use config::{BaselineChoice, CvConfig, Preset, RunConfig, TransferConfig};
pub use heatmap::render_heatmap;
pub use report::{ManifestEntry, ModelComparison, OutputDir};

use report::{file_stem, fmt_opt, strings, write_comparison, write_dispersion, write_importance, write_transfer};

/// Test-set outcome of one model family on one (county, hazard) pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyOutcome {
    pub family: ModelKind,
    pub best_params: String,
    pub best_config: ModelConfig,
    pub cv_mean_scores: Vec<Option<f64>>,
    pub confusion: Confusion,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub f_beta: Option<f64>,
    #[serde(skip)]
    pub model: Option<TrainedModel>,
    #[serde(skip)]
    pub cv_table: Vec<u8>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellOutcome {
    pub county: String,
    pub hazard: String,
    pub n_train: usize,
    pub n_test: usize,
    pub threshold: f64,
    pub prevalence: f64,
    pub families: Vec<FamilyOutcome>,
    #[serde(skip)]
    pub importance: Option<ImportanceVector>,
    #[serde(skip)]
    pub importance_error: Option<String>,
    #[serde(skip)]
    pub train_ids: Vec<String>,
    #[serde(skip)]
    pub test: Option<TestSplit>,
    #[serde(skip)]
    pub full: Option<LabeledDataset>,
}

impl CellOutcome {
    pub fn family(&self, family: ModelKind) -> Option<&FamilyOutcome> {
        self.families.iter().find(|f| f.family == family)
    }

    pub fn forest(&self) -> Option<&TrainedModel> {
        self.family(ModelKind::Forest).and_then(|f| f.model.as_ref())
    }

    /// Rows a transferred model is scored on for this pair.
    pub fn evaluation(&self, set: EvaluationSet) -> Option<&LabeledDataset> {
        match set {
            EvaluationSet::TestSplit => self.test.as_ref().map(|t| &t.0),
            EvaluationSet::FullDataset => self.full.as_ref(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    Done(Box<CellOutcome>),
    Absent,
    Failed { error: String },
}

impl CellStatus {
    pub fn done(&self) -> Option<&CellOutcome> {
        match self {
            CellStatus::Done(c) => Some(c),
            _ => None,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            CellStatus::Done(_) => "done",
            CellStatus::Absent => "absent",
            CellStatus::Failed { .. } => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub county: Option<String>,
    pub hazard: Option<String>,
    pub stage: String,
    pub error: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub counties: Vec<String>,
    pub hazards: Vec<String>,
    pub beta: f64,
    /// `cells[county][hazard]`
    pub cells: Vec<Vec<CellStatus>>,
    pub comparison: Vec<ModelComparison>,
    pub dispersion_f_beta: Option<DispersionSummary>,
    pub dispersion_f1: Option<DispersionSummary>,
    pub overall_importance: BTreeMap<String, OverallImportance>,
    pub transfer: Vec<TransferMatrix>,
    pub failures: Vec<Failure>,
    pub manifest: Vec<ManifestEntry>,
}

impl RunReport {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn cell(&self, county: &str, hazard: &str) -> Option<&CellStatus> {
        let i = self.counties.iter().position(|c| c == county)?;
        let j = self.hazards.iter().position(|h| h == hazard)?;
        Some(&self.cells[i][j])
    }

    /// Test metric of one family as a county × hazard table; `f1` selects
    /// F1 instead of F-beta.
    pub fn metric_table(&self, family: ModelKind, f1: bool) -> MetricTable {
        let mut table = MetricTable::new(self.counties.clone(), self.hazards.clone());
        for (i, row) in self.cells.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                let value = cell
                    .done()
                    .and_then(|c| c.family(family))
                    .and_then(|f| if f1 { f.f1 } else { f.f_beta });
                table.set(i, j, value);
            }
        }
        table
    }
}

/// Per-hazard mean test F of each family over counties with a result.
pub fn compare_models(report: &RunReport) -> Vec<ModelComparison> {
    let families: BTreeSet<ModelKind> = report
        .cells
        .iter()
        .flatten()
        .filter_map(CellStatus::done)
        .flat_map(|c| c.families.iter().map(|f| f.family))
        .collect();
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let mut rows = Vec::new();
    for (j, hazard) in report.hazards.iter().enumerate() {
        for &family in &families {
            let outcomes: Vec<&FamilyOutcome> = report
                .cells
                .iter()
                .filter_map(|row| row[j].done())
                .filter_map(|c| c.family(family))
                .collect();
            let f1: Vec<f64> = outcomes.iter().filter_map(|f| f.f1).collect();
            let fb: Vec<f64> = outcomes.iter().filter_map(|f| f.f_beta).collect();
            rows.push(ModelComparison {
                hazard: hazard.clone(),
                family,
                n_counties: fb.len(),
                mean_f1: mean(&f1),
                mean_f_beta: mean(&fb),
            });
        }
    }
    rows
}

fn load_options(config: &RunConfig) -> LoadOptions {
    LoadOptions {
        missing_features: config.missing_features,
        ..LoadOptions::default()
    }
}

/// Loads or generates every county, with schemas aligned to the first.
pub fn load_datasets(config: &RunConfig) -> Result<Vec<CountyDataset>> {
    let mut datasets = if config.is_synthetic() {
        let specs = config.scenario_specs();
        specs
            .par_iter()
            .map(synth::generate_county)
            .collect::<Result<Vec<_>>>()?
    } else {
        let opts = load_options(config);
        config
            .counties
            .iter()
            .map(|p| load_county_csv(p, &opts))
            .collect::<Result<Vec<_>>>()?
    };
    let ids: BTreeSet<&str> = datasets.iter().map(|d| d.county_id()).collect();
    if ids.len() != datasets.len() {
        return Err(Error::Config("county ids must be unique".into()));
    }
    align_schemas(&mut datasets)?;
    Ok(datasets)
}

fn hazard_registry(config: &RunConfig, datasets: &[CountyDataset]) -> Vec<String> {
    let order = config.hazard_order();
    if !order.is_empty() {
        return order;
    }
    let all: BTreeSet<&str> = datasets.iter().flat_map(|d| d.hazard_ids()).collect();
    all.into_iter().map(String::from).collect()
}

fn feature_groups(config: &RunConfig) -> Result<FeatureGroups> {
    match &config.feature_groups {
        Some(path) => FeatureGroups::load(path),
        None if config.is_synthetic() => Ok(synth::catalog_groups()),
        None => Ok(FeatureGroups::default()),
    }
}

fn grid_for(config: &RunConfig, family: ModelKind) -> CvSpec {
    let grid = match family {
        ModelKind::Forest => config.forest_grid(),
        ModelKind::Gbt => config.gbt_grid(),
    };
    CvSpec {
        k: config.cv.k,
        grid,
        beta: config.beta,
    }
}

fn score_family(
    config: &RunConfig,
    family: ModelKind,
    train: &crate::selection::TrainSplit,
    test: &TestSplit,
    county: &str,
    hazard: &str,
) -> Result<FamilyOutcome> {
    let name = family.as_str();
    let cv = cross_validate(
        train,
        &base_config(family),
        &grid_for(config, family),
        derive_seed(config.seed, &["cv", county, hazard, name]),
    )?;
    let model = cv
        .best_config
        .fit(&train.0, derive_seed(config.seed, &["model", county, hazard, name]))?;
    let predicted = model.predict(&test.0.features)?;
    let c = confusion(&test.0.labels, &predicted)?;
    let defined = |r: Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NoPositives) => Ok(None),
        Err(e) => Err(e),
    };
    let mut cv_table = Vec::new();
    cv.write_table_csv(&mut cv_table)?;
    Ok(FamilyOutcome {
        family,
        best_params: describe_point(&cv.best_point),
        best_config: cv.best_config.clone(),
        cv_mean_scores: cv.mean_scores.clone(),
        precision: c.precision(),
        recall: c.recall(),
        f1: defined(f_beta(&c, 1.0))?,
        f_beta: defined(f_beta(&c, config.beta))?,
        confusion: c,
        model: Some(model),
        cv_table,
    })
}

fn run_cell(config: &RunConfig, dataset: &CountyDataset, hazard: &str) -> Result<CellOutcome> {
    let county = dataset.county_id();
    let labeled = make_labeled(dataset, hazard, config.missing_hazard)?;
    let (train, test) = stratified_split(
        &labeled,
        &SplitSpec {
            train_fraction: config.train_fraction,
            stratified: true,
            seed: derive_seed(config.seed, &["split", county, hazard]),
        },
    )?;
    let families = config
        .families
        .iter()
        .map(|&family| score_family(config, family, &train, &test, county, hazard))
        .collect::<Result<Vec<_>>>()?;
    let forest = families
        .iter()
        .find(|f| f.family == ModelKind::Forest)
        .and_then(|f| f.model.as_ref())
        .and_then(TrainedModel::as_forest)
        .ok_or_else(|| Error::Config("forest family missing".into()))?;
    let (importance, importance_error) =
        match ImportanceVector::from_forest(forest, config.importance) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
    Ok(CellOutcome {
        county: county.to_string(),
        hazard: hazard.to_string(),
        n_train: train.0.n_rows(),
        n_test: test.0.n_rows(),
        threshold: labeled.threshold,
        prevalence: labeled.prevalence(),
        families,
        importance,
        importance_error,
        train_ids: train.0.tract_ids.clone(),
        test: Some(test),
        full: Some(labeled),
    })
}

fn participant<'a>(name: &str, entry: Option<(&'a TrainedModel, &'a LabeledDataset)>) -> Participant<'a> {
    Participant {
        name: name.to_string(),
        model: entry.map(|(m, _)| m as &dyn Classifier),
        eval: entry.map(|(_, d)| d),
    }
}

/// Grid of per-(county, hazard) forests and evaluation rows used to build
/// transfer matrices.
pub struct TransferInputs<'a> {
    pub counties: Vec<String>,
    pub hazards: Vec<String>,
    /// `entries[county][hazard]`
    pub entries: Vec<Vec<Option<(&'a TrainedModel, &'a LabeledDataset)>>>,
}

impl TransferInputs<'_> {
    /// Every cross-county matrix (one per hazard) and cross-hazard matrix
    /// (one per county) with at least two participants, in that order.
    pub fn matrices(&self, policy: &TransferPolicy) -> Result<Vec<TransferMatrix>> {
        let present = |v: &[Participant<'_>]| v.iter().filter(|p| p.model.is_some()).count() >= 2;
        let mut out = Vec::new();
        for (j, hazard) in self.hazards.iter().enumerate() {
            let parts: Vec<_> = self
                .counties
                .iter()
                .enumerate()
                .map(|(i, c)| participant(c, self.entries[i][j]))
                .collect();
            if present(&parts) {
                out.push(transfer::cross_county(hazard, &parts, policy)?);
            }
        }
        for (i, county) in self.counties.iter().enumerate() {
            let parts: Vec<_> = self
                .hazards
                .iter()
                .enumerate()
                .map(|(j, h)| participant(h, self.entries[i][j]))
                .collect();
            if present(&parts) {
                out.push(transfer::cross_hazard(county, &parts, policy)?);
            }
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct SplitRecord {
    county: String,
    hazard: String,
    threshold: f64,
    train: Vec<String>,
    test: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ModelIndexEntry {
    county: String,
    hazard: String,
    family: ModelKind,
    path: String,
}

fn pair_stem(county: &str, hazard: &str) -> String {
    format!("{}__{}", file_stem(county), file_stem(hazard))
}

/// The config as written to the report: location and thread count removed.
fn portable_config(config: &RunConfig) -> RunConfig {
    let mut c = config.resolved();
    c.out = PathBuf::from(".");
    c.workers = 0;
    c
}

/// Runs the full experiment and writes the report directory.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &RunConfig) -> Result<RunReport> {
    let datasets = load_datasets(config)?;
    let groups = feature_groups(config)?;
    let hazards = hazard_registry(config, &datasets);
    let counties: Vec<String> = datasets.iter().map(|d| d.county_id().to_string()).collect();
    let mut out = OutputDir::create(&config.out)?;
    let mut failures = Vec::new();

    out.write_json("config.json", &portable_config(config))?;
    if config.is_synthetic() {
        for d in &datasets {
            let mut bytes = Vec::new();
            write_county_csv(d, &mut bytes)?;
            out.write(&format!("data/{}.csv", file_stem(d.county_id())), &bytes)?;
        }
    }

    let jobs: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|i| (0..hazards.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<CellStatus> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let d = &datasets[i];
            if !d.has_hazard(&hazards[j]) {
                return CellStatus::Absent;
            }
            match run_cell(config, d, &hazards[j]) {
                Ok(c) => CellStatus::Done(Box::new(c)),
                Err(e) => CellStatus::Failed {
                    error: e.in_job(d.county_id(), &hazards[j]).to_string(),
                },
            }
        })
        .collect();
    let mut cells: Vec<Vec<CellStatus>> = Vec::with_capacity(counties.len());
    let mut it = results.into_iter();
    for _ in 0..counties.len() {
        cells.push(it.by_ref().take(hazards.len()).collect());
    }

    let mut model_index = Vec::new();
    for (i, row) in cells.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            match cell {
                CellStatus::Failed { error } => failures.push(Failure {
                    county: Some(counties[i].clone()),
                    hazard: Some(hazards[j].clone()),
                    stage: "train".into(),
                    error: error.clone(),
                }),
                CellStatus::Absent => {}
                CellStatus::Done(c) => {
                    let stem = pair_stem(&c.county, &c.hazard);
                    if let Some(e) = &c.importance_error {
                        failures.push(Failure {
                            county: Some(c.county.clone()),
                            hazard: Some(c.hazard.clone()),
                            stage: "importance".into(),
                            error: e.clone(),
                        });
                    }
                    out.write_json(
                        &format!("splits/{stem}.json"),
                        &SplitRecord {
                            county: c.county.clone(),
                            hazard: c.hazard.clone(),
                            threshold: c.threshold,
                            train: c.train_ids.clone(),
                            test: c.test.as_ref().map(|t| t.0.tract_ids.clone()).unwrap_or_default(),
                        },
                    )?;
                    for f in &c.families {
                        let rel = format!("models/{stem}__{}.json", f.family);
                        if let Some(model) = &f.model {
                            let mut text = model.to_json()?;
                            text.push('\n');
                            out.write(&rel, text.as_bytes())?;
                            model_index.push(ModelIndexEntry {
                                county: c.county.clone(),
                                hazard: c.hazard.clone(),
                                family: f.family,
                                path: rel,
                            });
                        }
                        out.write(&format!("cv/{stem}__{}.csv", f.family), &f.cv_table)?;
                    }
                }
            }
        }
    }
    out.write_json("models/index.json", &model_index)?;

    let mut report = RunReport {
        counties,
        hazards,
        beta: config.beta,
        cells,
        comparison: Vec::new(),
        dispersion_f_beta: None,
        dispersion_f1: None,
        overall_importance: BTreeMap::new(),
        transfer: Vec::new(),
        failures: Vec::new(),
        manifest: Vec::new(),
    };

    write_metric_table(&mut out, &report)?;
    out.write_json("metrics.json", &report.cells)?;

    report.comparison = compare_models(&report);
    write_comparison(&mut out, &report.comparison)?;

    for (f1, name) in [(false, "f_beta"), (true, "f1")] {
        match dispersion_summary(&report.metric_table(ModelKind::Forest, f1)) {
            Ok(summary) => {
                write_dispersion(&mut out, &format!("dispersion_{name}.csv"), &summary)?;
                if f1 {
                    report.dispersion_f1 = Some(summary);
                } else {
                    report.dispersion_f_beta = Some(summary);
                }
            }
            Err(Error::NoEntries(_)) => {}
            Err(e) => return Err(e),
        }
    }

    for (j, hazard) in report.hazards.iter().enumerate() {
        let per_county: Vec<(String, ImportanceVector)> = report
            .cells
            .iter()
            .filter_map(|row| row[j].done())
            .filter_map(|c| c.importance.clone().map(|v| (c.county.clone(), v)))
            .collect();
        if per_county.is_empty() {
            continue;
        }
        let overall = write_importance(&mut out, hazard, &per_county, &groups, config.top_k)?;
        report.overall_importance.insert(hazard.clone(), overall);
    }

    let inputs = TransferInputs {
        counties: report.counties.clone(),
        hazards: report.hazards.clone(),
        entries: report
            .cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| {
                        let c = cell.done()?;
                        Some((c.forest()?, c.evaluation(config.transfer.evaluation)?))
                    })
                    .collect()
            })
            .collect(),
    };
    let mut matrices = Vec::new();
    for policy in config.transfer.policies(config.beta) {
        match inputs.matrices(&policy) {
            Ok(m) => matrices.extend(m),
            Err(e) => failures.push(Failure {
                county: None,
                hazard: None,
                stage: "transfer".into(),
                error: e.to_string(),
            }),
        }
    }
    for m in &matrices {
        write_transfer(&mut out, m)?;
    }
    report.transfer = matrices;
    report.failures = failures;

    out.write_json("failures.json", &report.failures)?;
    out.write_json("summary.json", &summary(&report))?;
    report.manifest = out.finish()?;
    Ok(report)
}

fn summary(report: &RunReport) -> serde_json::Value {
    let status: BTreeMap<&str, BTreeMap<&str, &str>> = report
        .counties
        .iter()
        .zip(&report.cells)
        .map(|(c, row)| {
            (
                c.as_str(),
                report
                    .hazards
                    .iter()
                    .zip(row)
                    .map(|(h, cell)| (h.as_str(), cell.label()))
                    .collect(),
            )
        })
        .collect();
    let top: BTreeMap<&str, Vec<&str>> = report
        .overall_importance
        .iter()
        .map(|(h, o)| (h.as_str(), o.top_names()))
        .collect();
    let transfer: Vec<String> = report
        .transfer
        .iter()
        .map(|m| format!("{}.csv", report::transfer_stem(m)))
        .collect();
    serde_json::json!({
        "counties": report.counties,
        "hazards": report.hazards,
        "beta": report.beta,
        "status": status,
        "model_comparison": report.comparison,
        "dispersion_f_beta": report.dispersion_f_beta,
        "dispersion_f1": report.dispersion_f1,
        "top_features": top,
        "transfer_tables": transfer,
        "n_failures": report.failures.len(),
    })
}

/// County × hazard table of split sizes and test scores (in %), with an
/// `Average` row over counties where each pair is present.
fn write_metric_table(out: &mut OutputDir, report: &RunReport) -> Result<()> {
    let hazards = &report.hazards;
    let mut header = vec!["county".to_string()];
    for prefix in ["train", "test", "f1", "f_beta"] {
        header.extend(hazards.iter().map(|h| format!("{prefix}_{h}")));
    }
    let forest = |c: &CellOutcome| c.family(ModelKind::Forest).cloned();
    let columns: [&dyn Fn(&CellOutcome) -> Option<f64>; 4] = [
        &|c| Some(c.n_train as f64),
        &|c| Some(c.n_test as f64),
        &|c| forest(c).and_then(|f| f.f1).map(|v| 100.0 * v),
        &|c| forest(c).and_then(|f| f.f_beta).map(|v| 100.0 * v),
    ];
    let mut rows = Vec::new();
    for (i, county) in report.counties.iter().enumerate() {
        let mut row = vec![county.clone()];
        for (k, col) in columns.iter().enumerate() {
            for j in 0..hazards.len() {
                let v = report.cells[i][j].done().and_then(|c| col(c));
                row.push(if k < 2 { fmt_opt(v, 0) } else { fmt_opt(v, 2) });
            }
        }
        rows.push(row);
    }
    let mut avg = vec!["Average".to_string()];
    for (k, col) in columns.iter().enumerate() {
        for j in 0..hazards.len() {
            let vals: Vec<f64> = report
                .cells
                .iter()
                .filter_map(|row| row[j].done().and_then(|c| col(c)))
                .collect();
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            // sizes round half away from zero, as printed tables do
            avg.push(if k < 2 { fmt_opt(mean.map(f64::round), 0) } else { fmt_opt(mean, 2) });
        }
    }
    rows.push(avg);
    out.write_csv("metrics.csv", &header, &rows)
}

/// Writes the CSV files of the given scenarios plus a feature group file.
pub fn emit_synthetic(specs: &[ScenarioSpec], dir: &Path) -> Result<Vec<ManifestEntry>> {
    let datasets = specs
        .par_iter()
        .map(synth::generate_county)
        .collect::<Result<Vec<_>>>()?;
    let mut out = OutputDir::create(dir)?;
    for d in &datasets {
        let mut bytes = Vec::new();
        write_county_csv(d, &mut bytes)?;
        out.write(&format!("{}.csv", file_stem(d.county_id())), &bytes)?;
    }
    let rows: Vec<Vec<String>> = synth::FEATURE_CATALOG
        .iter()
        .map(|(f, g)| vec![f.to_string(), g.to_string()])
        .collect();
    out.write_csv("feature_groups.csv", &strings(["feature", "group"]), &rows)?;
    out.write_json("scenarios.json", &specs)?;
    out.finish()
}

/// A finished run directory loaded back for recomputation.
pub struct RunDir {
    pub config: RunConfig,
    pub counties: Vec<String>,
    pub hazards: Vec<String>,
    models: Vec<(ModelIndexEntry, TrainedModel)>,
    datasets: Vec<CountyDataset>,
}

impl RunDir {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let config = RunConfig::load(dir.join("config.json"))?;
        let index_path = dir.join("models/index.json");
        let text = std::fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
        let index: Vec<ModelIndexEntry> = serde_json::from_str(&text)?;
        let models = index
            .into_iter()
            .map(|entry| {
                let path = dir.join(&entry.path);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                Ok((entry, TrainedModel::from_json(&text)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut datasets = if config.is_synthetic() {
            let opts = LoadOptions::default();
            config
                .scenario_specs()
                .iter()
                .map(|s| load_county_csv(dir.join(format!("data/{}.csv", file_stem(&s.county_id))), &opts))
                .collect::<Result<Vec<_>>>()?
        } else {
            let opts = load_options(&config);
            config
                .counties
                .iter()
                .map(|p| load_county_csv(p, &opts))
                .collect::<Result<Vec<_>>>()?
        };
        align_schemas(&mut datasets)?;
        let counties = datasets.iter().map(|d| d.county_id().to_string()).collect();
        let hazards = hazard_registry(&config, &datasets);
        Ok(RunDir {
            config,
            counties,
            hazards,
            models,
            datasets,
        })
    }

    fn model(&self, county: &str, hazard: &str, family: ModelKind) -> Option<&TrainedModel> {
        self.models
            .iter()
            .find(|(e, _)| e.county == county && e.hazard == hazard && e.family == family)
            .map(|(_, m)| m)
    }

    /// Importance from the stored forests, written under `out`.
    pub fn importance(
        &self,
        out: &Path,
        formula: ImportanceFormula,
        top_k: usize,
        groups: &FeatureGroups,
    ) -> Result<(BTreeMap<String, OverallImportance>, Vec<ManifestEntry>)> {
        let mut writer = OutputDir::create(out)?;
        let mut overall = BTreeMap::new();
        for hazard in &self.hazards {
            let per_county = self
                .counties
                .iter()
                .filter_map(|c| {
                    let forest = self.model(c, hazard, ModelKind::Forest)?.as_forest()?;
                    Some(ImportanceVector::from_forest(forest, formula).map(|v| (c.clone(), v)))
                })
                .collect::<Result<Vec<_>>>()?;
            if per_county.is_empty() {
                continue;
            }
            let o = write_importance(&mut writer, hazard, &per_county, groups, top_k)?;
            overall.insert(hazard.clone(), o);
        }
        Ok((overall, writer.finish()?))
    }

    /// Transfer matrices from the stored forests and splits, written under
    /// `out`.
    pub fn transfer(
        &self,
        dir: &Path,
        out: &Path,
        transfer: &TransferConfig,
    ) -> Result<(Vec<TransferMatrix>, Vec<ManifestEntry>)> {
        let mut evals: Vec<Vec<Option<LabeledDataset>>> = Vec::new();
        for d in &self.datasets {
            let mut row = Vec::new();
            for hazard in &self.hazards {
                let path = dir.join(format!("splits/{}.json", pair_stem(d.county_id(), hazard)));
                if !path.is_file() || !d.has_hazard(hazard) {
                    row.push(None);
                    continue;
                }
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let split: SplitRecord = serde_json::from_str(&text)?;
                let policy = self.config.missing_hazard;
                let full = make_labeled(d, hazard, policy)?;
                row.push(Some(match transfer.evaluation {
                    EvaluationSet::FullDataset => full,
                    EvaluationSet::TestSplit => {
                        let wanted: BTreeSet<&str> = split.test.iter().map(String::as_str).collect();
                        let rows: Vec<usize> = (0..full.n_rows())
                            .filter(|&r| wanted.contains(full.tract_ids[r].as_str()))
                            .collect();
                        full.subset(&rows)
                    }
                }));
            }
            evals.push(row);
        }
        let inputs = TransferInputs {
            counties: self.counties.clone(),
            hazards: self.hazards.clone(),
            entries: self
                .counties
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    self.hazards
                        .iter()
                        .enumerate()
                        .map(|(j, h)| Some((self.model(c, h, ModelKind::Forest)?, evals[i][j].as_ref()?)))
                        .collect()
                })
                .collect(),
        };
        let mut writer = OutputDir::create(out)?;
        let mut matrices = Vec::new();
        for policy in transfer.policies(self.config.beta) {
            matrices.extend(inputs.matrices(&policy)?);
        }
        for m in &matrices {
            write_transfer(&mut writer, m)?;
        }
        Ok((matrices, writer.finish()?))
    }
}
