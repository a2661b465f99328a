//! Batch commands behind the `rw2cf` binary. Each command renders all of its
//! outputs in memory and only then writes them, so a failure leaves no
//! partial files behind.

pub mod config;
pub mod output;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use rw2cf_core::counterfactual::{read_counterfactual_csv, write_counterfactual_csv};
use rw2cf_core::data::{load_csv, prepare, write_csv, Dataset, PreparedModelInput};
use rw2cf_core::evaluation::{generate_synthetic, run_cv, SyntheticSpec};
use rw2cf_core::sampler::{
    diagnose, read_draws_csv, run_chains, summarize_parameters, write_draws_csv, ParameterSummary,
};
use rw2cf_core::{
    predict_counterfactual, summarize_prediction, CounterfactualSummary, ForecastInput, Interval95,
};
use serde::Serialize;
use thiserror::Error;

pub use config::RunConfig;
use output::OutputSet;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Core(#[from] rw2cf_core::Error),
}

impl CliError {
    /// 1 for bad inputs, 2 for numerical or I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Seed for the predictive draws, kept apart from the chain streams.
pub fn predictive_seed(seed: u64) -> u64 {
    seed ^ 0x5DEE_CE66_D1CE_F00D
}

fn load_dataset(cfg: &RunConfig) -> CliResult<Dataset> {
    let path = cfg.data_path();
    if !path.is_file() {
        return Err(CliError::Validation(format!("data file not found: {}", path.display())));
    }
    let ds = load_csv(&path)?;
    Ok(ds.select(&cfg.outcome, &cfg.covariates)?)
}

fn prepared(cfg: &RunConfig, ds: &Dataset) -> CliResult<PreparedModelInput> {
    if cfg.horizon_end > ds.end() {
        return Err(CliError::Validation(format!(
            "horizon_end {} is beyond the data ({})",
            cfg.horizon_end,
            ds.end()
        )));
    }
    Ok(prepare(ds, &cfg.model(), cfg.train_end)?)
}

#[derive(Debug, Serialize)]
struct CoefficientReport<'a> {
    outcome: &'a str,
    standardized_outcome: bool,
    train_start: String,
    train_end: String,
    draws: usize,
    parameters: Vec<ParameterSummary>,
}

pub fn cmd_fit(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let ds = load_dataset(cfg)?;
    let input = prepared(cfg, &ds)?;
    let draws = run_chains(&input, &cfg.model(), &cfg.sampler_settings())?;

    let mut files = OutputSet::new();
    let mut buf = Vec::new();
    write_draws_csv(&draws, &mut buf)?;
    files.add("draws.csv", buf);
    files.add_json(
        "coefficients.json",
        &CoefficientReport {
            outcome: &cfg.outcome,
            standardized_outcome: cfg.standardize_outcome,
            train_start: ds.start().to_string(),
            train_end: cfg.train_end.to_string(),
            draws: draws.len(),
            parameters: summarize_parameters(&draws),
        },
    )?;
    files.add_json("diagnostics.json", &diagnose(&draws))?;
    Ok(files.commit(out)?)
}

#[derive(Debug, Serialize)]
struct ExcessReport<'a> {
    outcome: &'a str,
    /// Sum over observed horizon months, computed draw by draw.
    cumulative_excess: Option<Interval95>,
    #[serde(flatten)]
    summary: &'a CounterfactualSummary,
}

pub fn cmd_predict(cfg: &RunConfig, out: &Path, draws_path: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let ds = load_dataset(cfg)?;
    let input = prepared(cfg, &ds)?;
    let path = draws_path.map_or_else(|| out.join("draws.csv"), Path::to_path_buf);
    let file = fs::File::open(&path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let draws = read_draws_csv(file)?;
    let forecast = ForecastInput::from_dataset(&ds, &input, cfg.horizon_end)?;
    let pred = predict_counterfactual(&draws, &input, &forecast, predictive_seed(cfg.seed))?;
    let summary = summarize_prediction(&pred, &forecast.observed);

    let observed: Vec<(usize, f64)> = forecast
        .observed
        .iter()
        .enumerate()
        .filter_map(|(h, o)| o.map(|v| (h, v)))
        .collect();
    let cumulative_excess = (!observed.is_empty()).then(|| {
        let totals: Vec<f64> = (0..draws.len())
            .map(|d| observed.iter().map(|&(h, o)| o - pred.values[h][d]).sum())
            .collect();
        Interval95::from_draws(&totals)
    });

    let mut files = OutputSet::new();
    let mut buf = Vec::new();
    write_counterfactual_csv(&summary, &mut buf)?;
    files.add("counterfactual.csv", buf);
    files.add_json(
        "excess.json",
        &ExcessReport {
            outcome: &cfg.outcome,
            cumulative_excess,
            summary: &summary,
        },
    )?;
    Ok(files.commit(out)?)
}

pub fn cmd_cv(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let ds = load_dataset(cfg)?;
    let outcome = run_cv(&ds, &cfg.model(), &cfg.sampler_settings(), &cfg.cv)?;
    let mut months: Vec<_> = outcome
        .predictions
        .into_iter()
        .flat_map(|(_, s)| s.months)
        .collect();
    months.sort_by_key(|m| m.month);

    let mut files = OutputSet::new();
    files.add_json("cv_report.json", &outcome.report)?;
    let mut buf = Vec::new();
    write_counterfactual_csv(&CounterfactualSummary { months }, &mut buf)?;
    files.add("cv_predictions.csv", buf);
    Ok(files.commit(out)?)
}

pub fn load_synthetic_spec(path: &Path) -> CliResult<SyntheticSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn cmd_simulate(spec: &SyntheticSpec, out: &Path) -> CliResult<Vec<PathBuf>> {
    let ds = generate_synthetic(spec)?;
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf)?;
    let mut files = OutputSet::new();
    files.add("synthetic.csv", buf);
    Ok(files.commit(out)?)
}

pub fn cmd_report(input: &Path, out: &Path, title: &str, decimals: usize) -> CliResult<Vec<PathBuf>> {
    let file = fs::File::open(input)
        .map_err(|e| CliError::Validation(format!("{}: {e}", input.display())))?;
    let summary = read_counterfactual_csv(file)?;
    let mut files = OutputSet::new();
    files.add("ribbon_data.csv", report::ribbon_csv(&summary)?);
    files.add("report.md", report::markdown(&summary, title, decimals).into_bytes());
    files.add("plot.svg", report::svg(&summary, title).into_bytes());
    Ok(files.commit(out)?)
}
