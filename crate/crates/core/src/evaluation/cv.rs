//! Leave-one-year-out cross-validation.
//!
//! Each fold keeps the held-out year inside the latent field but removes it
//! from scaler fitting and from the likelihood, so its months are predicted
//! from the posterior of the interpolated trend plus the regression terms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{adjusted_r2, coverage95};
use crate::counterfactual::{
    check_compatible, predictive_model_scale, summarize_prediction, CounterfactualSummary,
    PredictionTarget, PredictiveDraws,
};
use crate::data::{prepare_with_holdout, Dataset};
use crate::error::{Error, Result};
use crate::month::CalendarMonth;
use crate::sampler::{run_chains, ModelConfig, SamplerSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSettings {
    /// Candidate held-out years; defaults to 2010 through 2019.
    pub years: Vec<i32>,
    /// Keep years the data only partly covers.
    pub include_partial_years: bool,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            years: (2010..=2019).collect(),
            include_partial_years: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvFold {
    pub held_out_year: i32,
    /// Field indices (0-based) that are training months.
    pub train_months: Vec<usize>,
    /// Field indices of the held-out year.
    pub test_months: Vec<usize>,
}

/// Field covered by a CV run: data start through the last month of the
/// latest requested year that the data reaches.
fn cv_field_end(dataset: &Dataset, years: &[i32]) -> Result<CalendarMonth> {
    let last_year = years
        .iter()
        .copied()
        .max()
        .ok_or_else(|| Error::InvalidConfig("no cross-validation years".into()))?;
    let dec = CalendarMonth::new(last_year, 12).unwrap();
    if dec < dataset.start() {
        return Err(Error::YearAbsent(last_year));
    }
    Ok(dec.min(dataset.end()))
}

pub fn make_folds(dataset: &Dataset, years: &[i32]) -> Result<Vec<CvFold>> {
    make_folds_with(dataset, &CvSettings {
        years: years.to_vec(),
        include_partial_years: true,
    })
}

pub fn make_folds_with(dataset: &Dataset, settings: &CvSettings) -> Result<Vec<CvFold>> {
    let field_end = cv_field_end(dataset, &settings.years)?;
    let field_len = dataset.start().months_until(field_end) as usize + 1;
    let months: Vec<CalendarMonth> = dataset.months().take(field_len).collect();
    let mut years = settings.years.clone();
    years.sort_unstable();
    years.dedup();
    let mut folds = Vec::new();
    for year in years {
        let test: Vec<usize> = (0..field_len).filter(|&i| months[i].year() == year).collect();
        if test.is_empty() {
            return Err(Error::YearAbsent(year));
        }
        if test.len() < 12 && !settings.include_partial_years {
            continue;
        }
        let train = (0..field_len).filter(|&i| months[i].year() != year).collect();
        folds.push(CvFold {
            held_out_year: year,
            train_months: train,
            test_months: test,
        });
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub year: i32,
    pub n_train: usize,
    pub n_test: usize,
    pub adjusted_r2: Option<f64>,
    pub coverage95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledReport {
    pub n_test: usize,
    pub adjusted_r2: Option<f64>,
    pub coverage95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    /// Predictors counted in adjusted R² (covariates plus the lag term).
    pub predictors: usize,
    pub folds: Vec<FoldReport>,
    pub pooled: PooledReport,
}

/// Report plus the held-out predictions of every fold, in fold order.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: CvReport,
    pub predictions: Vec<(i32, CounterfactualSummary)>,
}

fn fold_seed(seed: u64, year: i32) -> u64 {
    seed ^ (year as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct FoldResult {
    year: i32,
    n_train: usize,
    summary: CounterfactualSummary,
}

fn run_fold(
    dataset: &Dataset,
    config: &ModelConfig,
    settings: &SamplerSettings,
    field_end: CalendarMonth,
    fold: &CvFold,
) -> Result<FoldResult> {
    let year = fold.held_out_year;
    let input = prepare_with_holdout(dataset, config, field_end, |m| m.year() == year)
        .map_err(|e| match e {
            Error::InvalidWindow(reason) => Error::FoldTooSmall { year, reason },
            other => other,
        })?;
    let n_train = input.likelihood_rows().len();
    if n_train < input.n_coefficients() + 2 {
        return Err(Error::FoldTooSmall {
            year,
            reason: format!(
                "{n_train} training months after lag trimming for {} coefficients",
                input.n_coefficients()
            ),
        });
    }
    let fold_settings = SamplerSettings {
        seed: fold_seed(settings.seed, year),
        ..settings.clone()
    };
    let draws = run_chains(&input, config, &fold_settings)?;
    check_compatible(&draws, &input)?;

    let mut months = Vec::new();
    let mut targets = Vec::new();
    let mut observed = Vec::new();
    for &t in &fold.test_months {
        let month = input.months()[t];
        let (Some(design), Some(obs)) = (input.design_row(t), dataset.outcome.get(month)) else {
            continue;
        };
        months.push(month);
        targets.push(PredictionTarget { position: t, design });
        observed.push(Some(obs));
    }
    let values = predictive_model_scale(&draws, &targets, fold_seed(settings.seed, year).rotate_left(17))
        .into_iter()
        .map(|v| v.into_iter().map(|z| input.unscale_outcome(z)).collect())
        .collect();
    let pred = PredictiveDraws { months, values };
    Ok(FoldResult {
        year,
        n_train,
        summary: summarize_prediction(&pred, &observed),
    })
}

fn metrics(summary: &[&CounterfactualSummary], predictors: usize) -> (usize, Option<f64>, Option<f64>) {
    let rows: Vec<_> = summary.iter().flat_map(|s| s.months.iter()).collect();
    let obs: Vec<f64> = rows.iter().map(|m| m.observed.expect("test rows are observed")).collect();
    let med: Vec<f64> = rows.iter().map(|m| m.prediction.median).collect();
    let iv: Vec<(f64, f64)> = rows
        .iter()
        .map(|m| (m.prediction.lower, m.prediction.upper))
        .collect();
    let n = obs.len();
    let cov = (n > 0).then(|| coverage95(&obs, &iv));
    (n, adjusted_r2(&obs, &med, predictors), cov)
}

/// Fit every fold, predict its held-out year and score the predictions.
/// Folds whose held-out months all lack a lagged outcome contribute no test
/// points; they are reported with `n_test = 0`.
pub fn run_cv(
    dataset: &Dataset,
    config: &ModelConfig,
    settings: &SamplerSettings,
    cv: &CvSettings,
) -> Result<CvOutcome> {
    config.validate()?;
    settings.validate()?;
    let field_end = cv_field_end(dataset, &cv.years)?;
    let folds = make_folds_with(dataset, cv)?;
    let results: Vec<Result<FoldResult>> = folds
        .par_iter()
        .map(|f| run_fold(dataset, config, settings, field_end, f))
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let predictors = config.covariates.len() + usize::from(config.use_lag12);
    let fold_reports = results
        .iter()
        .map(|r| {
            let (n_test, adj, cov) = metrics(&[&r.summary], predictors);
            FoldReport {
                year: r.year,
                n_train: r.n_train,
                n_test,
                adjusted_r2: adj,
                coverage95: cov,
            }
        })
        .collect();
    let all: Vec<&CounterfactualSummary> = results.iter().map(|r| &r.summary).collect();
    let (n_test, adj, cov) = metrics(&all, predictors);
    if n_test == 0 {
        return Err(Error::InvalidConfig(
            "no fold has a predictable held-out month".into(),
        ));
    }
    Ok(CvOutcome {
        report: CvReport {
            predictors,
            folds: fold_reports,
            pooled: PooledReport {
                n_test,
                adjusted_r2: adj,
                coverage95: cov,
            },
        },
        predictions: results.into_iter().map(|r| (r.year, r.summary)).collect(),
    })
}
