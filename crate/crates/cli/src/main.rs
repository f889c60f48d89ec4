use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use linkselect::ingest::{load_csv, Ingested};
use linkselect::report::{
    assemble_table, evaluate_cell, grid_cells, render_selection, render_table, to_json, CellOutcome,
    EvaluationDocument, RunManifest, SelectionDocument, EVALUATION_FORMAT, SELECTION_FORMAT,
};
use linkselect::selection::{discrepancies, select_all, ExpectedConclusion};
use linkselect::{CovariateRole, CvScheme, EvalOptions, FitConfig, IngestConfig, LinkSpec};

/// Choose a binary-regression link function by cross-validated fit quality.
#[derive(Debug, Parser)]
#[command(name = "linkselect", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Summarize a data file: size, class balance, dropped rows, covariate roles.
    Inspect {
        csv: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Cross-validate every requested link under every requested scheme.
    Evaluate {
        csv: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Write the full-precision evaluation document (JSON) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank links per metric from an evaluation file or a fresh evaluation.
    Select {
        /// Evaluate this file first instead of reading `--from`.
        #[arg(required_unless_present = "from")]
        csv: Option<PathBuf>,
        /// Evaluation document written by `evaluate --out`.
        #[arg(long, conflicts_with = "csv")]
        from: Option<PathBuf>,
        /// JSON list of expected conclusions to check the result against.
        #[arg(long)]
        expect: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Write the selection document (JSON) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// How to read the CSV. Flags override values from `--config`.
#[derive(Debug, Args)]
struct DataArgs {
    /// TOML ingest configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Column holding the ordinal score.
    #[arg(long)]
    response: Option<String>,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    /// Covariates acting on the strength (positive) side.
    #[arg(long, value_delimiter = ',')]
    strength: Vec<String>,
    /// Covariates acting on the stress (negative) side.
    #[arg(long, value_delimiter = ',')]
    stress: Vec<String>,
    /// Scores at or above this are the positive class.
    #[arg(long)]
    threshold: Option<f64>,
    /// Z-score every covariate column.
    #[arg(long)]
    standardize: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, value_delimiter = ',', default_value = "probit,logit,cauchit,cloglog")]
    links: Vec<LinkSpec>,
    /// loocv, lpocv50, lpocv75, kfold5, kfold10, kfold:<k> or holdout:<fraction>:<repeats>.
    #[arg(long, value_delimiter = ',', default_value = "loocv,lpocv50,lpocv75,kfold5,kfold10")]
    schemes: Vec<String>,
    /// Predicted probability at or above which an observation is classed positive.
    #[arg(long, default_value_t = 0.5)]
    class_threshold: f64,
    /// Random splits per hold-out scheme.
    #[arg(long, default_value_t = linkselect::cv::DEFAULT_REPEATS)]
    repeats: usize,
    #[arg(long, env = "LINKSELECT_SEED", default_value_t = 0)]
    seed: u64,
    /// Keep the class balance of every fold close to the full data's.
    #[arg(long)]
    stratified: bool,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Relative deviance change at which a fit counts as converged.
    #[arg(long)]
    tolerance: Option<f64>,
}

/// A command that ran to the end, possibly with failed cells.
enum Completion {
    Full,
    Partial,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Inspect { csv, data } => inspect(&csv, &data),
        Command::Evaluate { csv, data, eval, out } => evaluate(&csv, &data, &eval, out.as_deref()),
        Command::Select {
            csv,
            from,
            expect,
            data,
            eval,
            out,
        } => select(csv.as_deref(), from.as_deref(), expect.as_deref(), &data, &eval, out.as_deref()),
    };
    match result {
        Ok(Completion::Full) => ExitCode::SUCCESS,
        Ok(Completion::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn ingest_config(args: &DataArgs) -> Result<IngestConfig> {
    let mut config = match &args.config {
        Some(path) => IngestConfig::from_toml_file(path)?,
        None => {
            let response = args.response.clone().context("--response is required without --config")?;
            let covariates = args.covariates.clone().context("--covariates is required without --config")?;
            IngestConfig::new(response, covariates)
        }
    };
    if let Some(r) = &args.response {
        config.response_column = r.clone();
    }
    if let Some(c) = &args.covariates {
        config.covariate_columns = c.clone();
    }
    if let Some(t) = args.threshold {
        config.threshold = t;
    }
    if args.standardize {
        config.standardize = true;
    }
    for col in &args.strength {
        config.role_map.insert(col.clone(), CovariateRole::Strength);
    }
    for col in &args.stress {
        config.role_map.insert(col.clone(), CovariateRole::Stress);
    }
    config.fill_known_roles();
    Ok(config)
}

fn load(csv: &Path, config: &IngestConfig) -> Result<Ingested> {
    load_csv(csv, config).with_context(|| format!("reading {}", csv.display()))
}

fn inspect(csv: &Path, args: &DataArgs) -> Result<Completion> {
    let config = ingest_config(args)?;
    let got = load(csv, &config)?;
    let data = &got.dataset;
    let positives = data.positives();
    let share = |c: usize| 100.0 * c as f64 / data.n() as f64;
    println!("file: {}", csv.display());
    println!("rows: {} read, {} dropped for missing values", got.total_rows, got.dropped_rows);
    println!("n = {}, k = {}", data.n(), data.k());
    println!(
        "response: {} >= {} -> positive {} ({:.1}%), negative {} ({:.1}%)",
        config.response_column,
        config.threshold,
        positives,
        share(positives),
        data.n() - positives,
        share(data.n() - positives)
    );
    for role in [CovariateRole::Strength, CovariateRole::Stress] {
        let names: Vec<&str> = data
            .covariate_names()
            .iter()
            .zip(data.covariate_roles())
            .filter(|(_, r)| **r == role)
            .map(|(n, _)| n.as_str())
            .collect();
        println!("{role} ({}): {}", names.len(), if names.is_empty() { "-".into() } else { names.join(", ") });
    }
    if config.standardize {
        println!("covariates standardized");
    }
    Ok(Completion::Full)
}

fn eval_options(args: &EvalArgs) -> Result<EvalOptions> {
    let mut fit = FitConfig::default();
    if let Some(m) = args.max_iterations {
        fit.max_iterations = m;
    }
    if let Some(t) = args.tolerance {
        fit.tolerance = t;
    }
    fit.validate()?;
    if !(0.0..=1.0).contains(&args.class_threshold) {
        bail!("--class-threshold must lie in [0, 1]");
    }
    Ok(EvalOptions {
        fit,
        threshold: args.class_threshold,
        seed: args.seed,
        stratified: args.stratified,
    })
}

fn schemes(args: &EvalArgs) -> Result<Vec<CvScheme>> {
    args.schemes
        .iter()
        .map(|s| CvScheme::parse_with_repeats(s, args.repeats).map_err(Into::into))
        .collect()
}

/// Runs the grid in parallel; results come back in manifest order.
fn run_evaluation(csv: &Path, data_args: &DataArgs, args: &EvalArgs) -> Result<EvaluationDocument> {
    if args.links.is_empty() {
        bail!("no links requested");
    }
    let ingest = ingest_config(data_args)?;
    let data = load(csv, &ingest)?.dataset;
    let options = eval_options(args)?;
    let schemes = schemes(args)?;
    let cells: Vec<CellOutcome> = grid_cells(&args.links, &schemes)
        .into_par_iter()
        .map(|(link, scheme)| evaluate_cell(&data, link, scheme, &options))
        .collect();
    for cell in &cells {
        match cell {
            CellOutcome::Evaluated(e) => {
                if e.skipped.total() > 0 {
                    eprintln!("note: {} {}: {} of {} folds skipped ({})", e.link, e.scheme, e.skipped.total(), e.folds, e.skipped);
                }
                if e.nonconverged > 0 {
                    eprintln!("note: {} {}: {} fits hit the iteration limit", e.link, e.scheme, e.nonconverged);
                }
            }
            CellOutcome::Failed { link, scheme, error } => eprintln!("warning: {link} {scheme} failed: {error}"),
        }
    }
    let table = assemble_table(&args.links, &schemes, &cells);
    let manifest = RunManifest {
        input: csv.display().to_string(),
        ingest,
        links: args.links.clone(),
        schemes,
        options,
        tool_version: env!("CARGO_PKG_VERSION").into(),
    };
    Ok(EvaluationDocument::new(Some(manifest), table, cells))
}

fn write_json<T: serde::Serialize>(path: &Path, doc: &T) -> Result<()> {
    fs::write(path, to_json(doc)?).with_context(|| format!("writing {}", path.display()))
}

fn evaluate(csv: &Path, data: &DataArgs, args: &EvalArgs, out: Option<&Path>) -> Result<Completion> {
    let doc = run_evaluation(csv, data, args)?;
    let failed = doc.failed_schemes();
    print!("{}", render_table(&doc.table, &failed));
    if let Some(path) = out {
        write_json(path, &doc)?;
    }
    Ok(if failed.is_empty() { Completion::Full } else { Completion::Partial })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn select(
    csv: Option<&Path>,
    from: Option<&Path>,
    expect: Option<&Path>,
    data: &DataArgs,
    args: &EvalArgs,
    out: Option<&Path>,
) -> Result<Completion> {
    let doc: EvaluationDocument = match (from, csv) {
        (Some(path), _) => {
            let doc: EvaluationDocument = read_json(path)?;
            if doc.format != EVALUATION_FORMAT {
                bail!("{}: unsupported format `{}`", path.display(), doc.format);
            }
            doc
        }
        (None, Some(csv)) => run_evaluation(csv, data, args)?,
        (None, None) => bail!("give a CSV file or --from"),
    };
    let report = select_all(&doc.table)?;
    let found = match expect {
        Some(path) => {
            let expected: Vec<ExpectedConclusion> = read_json(path)?;
            Some(discrepancies(&report, &expected))
        }
        None => None,
    };
    print!("{}", render_selection(&report, found.as_deref()));
    if let Some(path) = out {
        let selection = SelectionDocument {
            format: SELECTION_FORMAT.into(),
            source: from.map(|p| p.display().to_string()),
            manifest: doc.manifest.clone(),
            report,
            discrepancies: found,
        };
        write_json(path, &selection)?;
    }
    Ok(if doc.failed_schemes().is_empty() { Completion::Full } else { Completion::Partial })
}
