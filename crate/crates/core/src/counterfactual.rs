//! Posterior-predictive counterfactuals and observed-minus-predicted excess.
//!
//! For every retained draw the latent trend is carried past the end of the
//! training field with the RW2 innovation recursion, the linear predictor is
//! formed from that draw's coefficients, and observation noise is added.
//! Predictions are mapped back to the raw outcome scale before any summary.
//! Excess is computed draw by draw and only then summarized.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PreparedModelInput};
use crate::error::{Error, Result};
use crate::month::CalendarMonth;
use crate::rw2::rw2_forward_simulate;
use crate::sampler::PosteriorDraws;
use crate::stats::Interval95;

/// Raw-scale inputs for the months to be predicted.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastInput {
    pub months: Vec<CalendarMonth>,
    /// `covariates[h][j]`: covariate `j` at horizon month `h`, raw scale.
    pub covariates: Vec<Vec<f64>>,
    /// Observed outcome `lag` months earlier, raw scale (`None` without a lag term).
    pub lag: Vec<Option<f64>>,
    pub observed: Vec<Option<f64>>,
}

impl ForecastInput {
    /// Horizon from the month after the training field through `horizon_end`,
    /// reading covariates, lags and observations from `dataset`.
    pub fn from_dataset(
        dataset: &Dataset,
        input: &PreparedModelInput,
        horizon_end: CalendarMonth,
    ) -> Result<Self> {
        let field_end = *input.months().last().expect("non-empty field");
        if horizon_end <= field_end {
            return Err(Error::InvalidWindow(format!(
                "horizon end {horizon_end} must come after training end {field_end}"
            )));
        }
        if horizon_end > dataset.end() {
            return Err(Error::InvalidWindow(format!(
                "horizon end {horizon_end} is beyond the data ({})",
                dataset.end()
            )));
        }
        let months: Vec<CalendarMonth> = (1..=field_end.months_until(horizon_end))
            .map(|h| field_end.add_months(h))
            .collect();
        let mut covariates = Vec::with_capacity(months.len());
        for &month in &months {
            let row = input
                .covariate_names()
                .iter()
                .map(|name| {
                    let series = dataset
                        .series(name)
                        .ok_or_else(|| Error::UnknownColumn(name.clone()))?;
                    series.get(month).ok_or_else(|| Error::MissingInWindow {
                        column: name.clone(),
                        month,
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            covariates.push(row);
        }
        let lag = months
            .iter()
            .map(|&month| {
                input
                    .lag()
                    .map(|l| {
                        let src = month.add_months(-(l.months as i64));
                        dataset.outcome.get(src).ok_or_else(|| Error::MissingInWindow {
                            column: format!("outcome lag {}", l.months),
                            month,
                        })
                    })
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        let observed = months.iter().map(|&m| dataset.outcome.get(m)).collect();
        Ok(Self {
            months,
            covariates,
            lag,
            observed,
        })
    }
}

/// Raw-scale predictive draws, `values[h][d]` for month `h` and draw `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDraws {
    pub months: Vec<CalendarMonth>,
    pub values: Vec<Vec<f64>>,
}

/// A month to predict: its position in (or beyond) the latent field and its
/// model-scale regression row `[1, x.., lag]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PredictionTarget {
    pub position: usize,
    pub design: Vec<f64>,
}

pub(crate) fn check_compatible(draws: &PosteriorDraws, input: &PreparedModelInput) -> Result<()> {
    if draws.is_empty() {
        return Err(Error::IncompatibleDraws("no draws".into()));
    }
    if draws.coefficient_names != input.coefficient_names() {
        return Err(Error::IncompatibleDraws(format!(
            "coefficients {:?} do not match model {:?}",
            draws.coefficient_names,
            input.coefficient_names()
        )));
    }
    if draws.field_len != input.field_len() {
        return Err(Error::IncompatibleDraws(format!(
            "latent field has {} months, model input has {}",
            draws.field_len,
            input.field_len()
        )));
    }
    Ok(())
}

/// Model-scale posterior-predictive draws, `out[target][draw]`.
pub(crate) fn predictive_model_scale(
    draws: &PosteriorDraws,
    targets: &[PredictionTarget],
    seed: u64,
) -> Vec<Vec<f64>> {
    let field_len = draws.field_len;
    let ahead = targets
        .iter()
        .map(|t| (t.position + 1).saturating_sub(field_len))
        .max()
        .unwrap_or(0);
    let per_draw: Vec<Vec<f64>> = draws
        .draws
        .par_iter()
        .enumerate()
        .map(|(d, draw)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(d as u64);
            let s = &draw.state;
            let path = if ahead > 0 {
                let last_two = (s.u[field_len - 2], s.u[field_len - 1]);
                rw2_forward_simulate(last_two, ahead, 1.0 / s.tau_e, &mut rng)
            } else {
                Vec::new()
            };
            let noise_sd = (1.0 / s.tau).sqrt();
            targets
                .iter()
                .map(|t| {
                    let u = if t.position < field_len {
                        s.u[t.position]
                    } else {
                        path[t.position - field_len]
                    };
                    let lambda: f64 = t
                        .design
                        .iter()
                        .zip(&s.coefficients)
                        .map(|(z, c)| z * c)
                        .sum::<f64>()
                        + u;
                    let e: f64 = StandardNormal.sample(&mut rng);
                    lambda + noise_sd * e
                })
                .collect()
        })
        .collect();
    (0..targets.len())
        .map(|i| per_draw.iter().map(|v| v[i]).collect())
        .collect()
}

/// Posterior-predictive draws for months following the training field.
pub fn predict_counterfactual(
    draws: &PosteriorDraws,
    input: &PreparedModelInput,
    forecast: &ForecastInput,
    seed: u64,
) -> Result<PredictiveDraws> {
    check_compatible(draws, input)?;
    let field_end = *input.months().last().expect("non-empty field");
    let mut targets = Vec::with_capacity(forecast.months.len());
    for (h, &month) in forecast.months.iter().enumerate() {
        if month != field_end.add_months(h as i64 + 1) {
            return Err(Error::InvalidWindow(format!(
                "forecast months must directly follow {field_end}; found {month} at step {}",
                h + 1
            )));
        }
        let raw = forecast.covariates.get(h).ok_or_else(|| Error::MissingInWindow {
            column: "covariates".into(),
            month,
        })?;
        if raw.len() != input.n_covariates() {
            return Err(Error::InvalidConfig(format!(
                "{month}: expected {} covariates, got {}",
                input.n_covariates(),
                raw.len()
            )));
        }
        let mut design = vec![1.0];
        design.extend(input.scale_covariates(raw));
        if let Some(lag) = input.lag() {
            let v = forecast.lag.get(h).copied().flatten().ok_or_else(|| {
                Error::MissingInWindow {
                    column: format!("outcome lag {}", lag.months),
                    month,
                }
            })?;
            design.push(input.scale_outcome(v));
        }
        targets.push(PredictionTarget {
            position: input.field_len() + h,
            design,
        });
    }
    let values = predictive_model_scale(draws, &targets, seed)
        .into_iter()
        .map(|v| v.into_iter().map(|z| input.unscale_outcome(z)).collect())
        .collect();
    Ok(PredictiveDraws {
        months: forecast.months.clone(),
        values,
    })
}

/// Whether a month's excess interval excludes zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    Decrease,
    Increase,
    Indistinguishable,
}

impl Significance {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Decrease => "decrease",
            Self::Increase => "increase",
            Self::Indistinguishable => "indistinguishable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "decrease" => Some(Self::Decrease),
            "increase" => Some(Self::Increase),
            "indistinguishable" => Some(Self::Indistinguishable),
            _ => None,
        }
    }
}

pub fn flag_significance(excess: &Interval95) -> Significance {
    if excess.upper < 0.0 {
        Significance::Decrease
    } else if excess.lower > 0.0 {
        Significance::Increase
    } else {
        Significance::Indistinguishable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthSummary {
    pub month: CalendarMonth,
    pub observed: Option<f64>,
    pub prediction: Interval95,
    pub excess: Option<Interval95>,
    pub flag: Option<Significance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualSummary {
    pub months: Vec<MonthSummary>,
}

pub fn summarize_prediction(pred: &PredictiveDraws, observed: &[Option<f64>]) -> CounterfactualSummary {
    let months = pred
        .months
        .iter()
        .zip(&pred.values)
        .enumerate()
        .map(|(h, (&month, values))| {
            let obs = observed.get(h).copied().flatten();
            let excess = obs.map(|o| {
                let diffs: Vec<f64> = values.iter().map(|p| o - p).collect();
                Interval95::from_draws(&diffs)
            });
            MonthSummary {
                month,
                observed: obs,
                prediction: Interval95::from_draws(values),
                flag: excess.as_ref().map(flag_significance),
                excess,
            }
        })
        .collect();
    CounterfactualSummary { months }
}

pub const COUNTERFACTUAL_COLUMNS: [&str; 9] = [
    "month",
    "observed",
    "pred_median",
    "pred_lo",
    "pred_hi",
    "excess_median",
    "excess_lo",
    "excess_hi",
    "flag",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_counterfactual_csv<W: Write>(summary: &CounterfactualSummary, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COUNTERFACTUAL_COLUMNS)?;
    for m in &summary.months {
        w.write_record([
            m.month.to_string(),
            opt(m.observed),
            m.prediction.median.to_string(),
            m.prediction.lower.to_string(),
            m.prediction.upper.to_string(),
            opt(m.excess.map(|e| e.median)),
            opt(m.excess.map(|e| e.lower)),
            opt(m.excess.map(|e| e.upper)),
            m.flag.map(|f| f.as_str().to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_counterfactual_csv<R: Read>(reader: R) -> Result<CounterfactualSummary> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<&str> = rdr.headers()?.iter().collect::<Vec<_>>();
    if header != COUNTERFACTUAL_COLUMNS {
        return Err(Error::InvalidConfig(format!(
            "counterfactual header must be {}",
            COUNTERFACTUAL_COLUMNS.join(",")
        )));
    }
    let mut months = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| -> Result<Option<f64>> {
            let s = rec[i].trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|_| Error::NonNumeric {
                row,
                column: COUNTERFACTUAL_COLUMNS[i].to_string(),
                value: s.to_string(),
            })
        };
        let req = |i: usize| -> Result<f64> {
            num(i)?.ok_or_else(|| Error::NonNumeric {
                row,
                column: COUNTERFACTUAL_COLUMNS[i].to_string(),
                value: String::new(),
            })
        };
        let month: CalendarMonth = rec[0].parse().map_err(|_| Error::MalformedMonth {
            row,
            value: rec[0].to_string(),
        })?;
        let excess = match (num(5)?, num(6)?, num(7)?) {
            (Some(median), Some(lower), Some(upper)) => Some(Interval95 {
                median,
                lower,
                upper,
            }),
            (None, None, None) => None,
            _ => {
                return Err(Error::NonNumeric {
                    row,
                    column: "excess".into(),
                    value: "partially empty".into(),
                })
            }
        };
        let flag = match rec[8].trim() {
            "" => None,
            s => Some(Significance::parse(s).ok_or_else(|| Error::NonNumeric {
                row,
                column: "flag".into(),
                value: s.to_string(),
            })?),
        };
        months.push(MonthSummary {
            month,
            observed: num(1)?,
            prediction: Interval95 {
                median: req(2)?,
                lower: req(3)?,
                upper: req(4)?,
            },
            excess,
            flag,
        });
    }
    Ok(CounterfactualSummary { months })
}

#[cfg(test)]
mod tests;
