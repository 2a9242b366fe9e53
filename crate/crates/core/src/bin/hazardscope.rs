use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use hazardscope::importance::FeatureGroups;
use hazardscope::pipeline::config::{apply_overrides, parse_override, BaselineChoice, Preset};
use hazardscope::pipeline::{self, RunConfig, RunDir, TransferConfig};
use hazardscope::synth::{self, ScenarioSpec};
use hazardscope::transfer::EvaluationSet;
use hazardscope::{Error, ImportanceFormula};

const EXIT_VALIDATION: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "hazardscope", version, about = "Tree-ensemble hazard exposure analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment from a config file and/or flags.
    Run(RunArgs),
    /// Write synthetic county CSVs.
    Synth(SynthArgs),
    /// Recompute transfer matrices from a finished run.
    Transfer(TransferArgs),
    /// Recompute importance tables from a finished run.
    Importance(ImportanceArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Override any config key, e.g. `--set transfer.baseline=both`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, conflicts_with = "scenarios")]
    preset: Option<String>,
    /// JSON array of scenario specs.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "synth-out")]
    out: PathBuf,
}

#[derive(Args)]
struct TransferArgs {
    /// Directory written by `run`.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_baseline)]
    baseline: Option<BaselineChoice>,
    #[arg(long, value_parser = parse_evaluation)]
    evaluation: Option<EvaluationSet>,
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct ImportanceArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_formula)]
    formula: Option<ImportanceFormula>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    groups: Option<PathBuf>,
}

fn from_word<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_baseline(s: &str) -> Result<BaselineChoice, String> {
    from_word(s)
}

fn parse_evaluation(s: &str) -> Result<EvaluationSet, String> {
    from_word(s)
}

fn parse_formula(s: &str) -> Result<ImportanceFormula, String> {
    from_word(s)
}

fn run_config(args: &RunArgs) -> Result<RunConfig, Error> {
    let mut doc = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)?
        }
        None => json!({}),
    };
    let mut overrides = Vec::new();
    if let Some(p) = &args.preset {
        p.parse::<Preset>()?;
        overrides.push(("preset".to_string(), json!(p).to_string()));
    }
    if let Some(seed) = args.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(out) = &args.out {
        overrides.push(("out".into(), json!(out).to_string()));
    }
    if let Some(w) = args.workers {
        overrides.push(("workers".into(), w.to_string()));
    }
    if let Some(b) = args.beta {
        overrides.push(("beta".into(), b.to_string()));
    }
    if let Some(k) = args.top_k {
        overrides.push(("top_k".into(), k.to_string()));
    }
    for o in &args.overrides {
        overrides.push(parse_override(o)?);
    }
    apply_overrides(&mut doc, &overrides)?;
    let config = RunConfig::from_value(doc)?;
    config.validate()?;
    Ok(config)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Error> {
    let config = run_config(&args)?;
    let report = pipeline::run(&config)?;
    let done = report
        .cells
        .iter()
        .flatten()
        .filter(|c| c.done().is_some())
        .count();
    println!(
        "{} of {} (county, hazard) pairs trained; {} files written to {}",
        done,
        report.counties.len() * report.hazards.len(),
        report.manifest.len() + 1,
        config.out.display()
    );
    for f in &report.failures {
        eprintln!("failed [{}] {}", f.stage, f.error);
    }
    Ok(if report.is_partial() {
        ExitCode::from(EXIT_PARTIAL)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_synth(args: SynthArgs) -> Result<ExitCode, Error> {
    let specs: Vec<ScenarioSpec> = match (&args.preset, &args.scenarios) {
        (Some(p), None) => {
            let Preset::Synth6x3 = p.parse::<Preset>()?;
            let seed = args
                .seed
                .ok_or_else(|| Error::Config("--seed is required with --preset".into()))?;
            synth::synth6x3(seed)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let mut specs: Vec<ScenarioSpec> =
                serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            if let Some(seed) = args.seed {
                for s in &mut specs {
                    s.seed = hazardscope::rng::derive_seed(seed, &["scenario", &s.county_id]);
                }
            }
            specs
        }
        _ => return Err(Error::Config("give one of --preset or --scenarios".into())),
    };
    let manifest = pipeline::emit_synthetic(&specs, &args.out)?;
    println!("{} files written to {}", manifest.len() + 1, args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_transfer(args: TransferArgs) -> Result<ExitCode, Error> {
    let run = RunDir::open(&args.run)?;
    let mut policy: TransferConfig = run.config.transfer.clone();
    if let Some(b) = args.baseline {
        policy.baseline = b;
    }
    if let Some(e) = args.evaluation {
        policy.evaluation = e;
    }
    if let Some(t) = args.threshold {
        policy.threshold_points = t;
    }
    if !(policy.threshold_points < 0.0) {
        return Err(Error::Config("--threshold must be negative".into()));
    }
    let out = args.out.unwrap_or_else(|| args.run.join("recomputed"));
    let (matrices, manifest) = run.transfer(&args.run, &out, &policy)?;
    println!(
        "{} matrices, {} files written to {}",
        matrices.len(),
        manifest.len() + 1,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_importance(args: ImportanceArgs) -> Result<ExitCode, Error> {
    let run = RunDir::open(&args.run)?;
    let groups = match &args.groups {
        Some(p) => FeatureGroups::load(p)?,
        None if run.config.is_synthetic() => synth::catalog_groups(),
        None => match &run.config.feature_groups {
            Some(p) => FeatureGroups::load(p)?,
            None => FeatureGroups::default(),
        },
    };
    let top_k = args.top_k.unwrap_or(run.config.top_k);
    if top_k == 0 {
        return Err(Error::Config("--top-k must be positive".into()));
    }
    let out = args.out.unwrap_or_else(|| args.run.join("recomputed"));
    let formula = args.formula.unwrap_or(run.config.importance);
    let (overall, manifest) = run.importance(&out, formula, top_k, &groups)?;
    for (hazard, o) in &overall {
        println!("{hazard}: {}", o.top_names().join(", "));
    }
    println!("{} files written to {}", manifest.len() + 1, out.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Transfer(a) => cmd_transfer(a),
        Command::Importance(a) => cmd_importance(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
