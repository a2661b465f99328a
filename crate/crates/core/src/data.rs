//! Monthly series ingestion and preparation of model inputs.
//!
//! The ingestion contract is a UTF-8 CSV with a `month` column (`YYYY-MM`)
//! followed by one column per variable. Empty cells are missing values.
//! [`prepare`] turns a [`Dataset`] into a [`PreparedModelInput`]: it fits
//! scalers on the training months only, builds the lagged outcome column on
//! the model scale, and marks which months contribute to the likelihood.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::month::CalendarMonth;
use crate::sampler::ModelConfig;

/// Contiguous monthly observations of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    pub name: String,
    pub start: CalendarMonth,
    pub values: Vec<Option<f64>>,
}

impl MonthlySeries {
    pub fn new(name: impl Into<String>, start: CalendarMonth, values: Vec<Option<f64>>) -> Self {
        Self {
            name: name.into(),
            start,
            values,
        }
    }

    pub fn from_values(name: impl Into<String>, start: CalendarMonth, values: &[f64]) -> Self {
        Self::new(name, start, values.iter().copied().map(Some).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> CalendarMonth {
        self.start.add_months(self.values.len() as i64 - 1)
    }

    pub fn month_at(&self, idx: usize) -> CalendarMonth {
        self.start.add_months(idx as i64)
    }

    pub fn index_of(&self, month: CalendarMonth) -> Option<usize> {
        let off = self.start.months_until(month);
        (off >= 0 && (off as usize) < self.values.len()).then_some(off as usize)
    }

    pub fn get(&self, month: CalendarMonth) -> Option<f64> {
        self.index_of(month).and_then(|i| self.values[i])
    }
}

/// Shift a series forward by `k` months: `out[t] = input[t - k]`.
pub fn build_lag(series: &MonthlySeries, k: usize) -> MonthlySeries {
    assert!(k >= 1, "lag must be at least one month");
    let n = series.values.len();
    let values = (0..n)
        .map(|t| if t >= k { series.values[t - k] } else { None })
        .collect();
    MonthlySeries::new(format!("{}_lag{k}", series.name), series.start, values)
}

/// An outcome plus covariates sharing one monthly index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub label: String,
    pub outcome: MonthlySeries,
    pub covariates: Vec<MonthlySeries>,
    /// Months absent from the source file, filled in as missing.
    pub gaps: Vec<CalendarMonth>,
}

impl Dataset {
    pub fn start(&self) -> CalendarMonth {
        self.outcome.start
    }

    pub fn end(&self) -> CalendarMonth {
        self.outcome.end()
    }

    pub fn len(&self) -> usize {
        self.outcome.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome.is_empty()
    }

    pub fn months(&self) -> impl Iterator<Item = CalendarMonth> + '_ {
        (0..self.len()).map(|i| self.outcome.month_at(i))
    }

    fn all_series(&self) -> impl Iterator<Item = &MonthlySeries> {
        std::iter::once(&self.outcome).chain(self.covariates.iter())
    }

    pub fn series(&self, name: &str) -> Option<&MonthlySeries> {
        self.all_series().find(|s| s.name == name)
    }

    /// Re-designate the outcome and keep only the named covariates, in order.
    pub fn select(&self, outcome: &str, covariates: &[String]) -> Result<Dataset> {
        let pick = |name: &str| {
            self.series(name)
                .cloned()
                .ok_or_else(|| Error::UnknownColumn(name.to_string()))
        };
        Ok(Dataset {
            label: self.label.clone(),
            outcome: pick(outcome)?,
            covariates: covariates.iter().map(|c| pick(c)).collect::<Result<_>>()?,
            gaps: self.gaps.clone(),
        })
    }

    fn check_aligned(&self) -> Result<()> {
        for s in &self.covariates {
            if s.start != self.outcome.start || s.len() != self.outcome.len() {
                return Err(Error::InvalidConfig(format!(
                    "series {:?} is not aligned with outcome {:?}",
                    s.name, self.outcome.name
                )));
            }
        }
        Ok(())
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<Option<f64>> {
    let s = raw.trim();
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::NonNumeric {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

/// Load a monthly CSV. The first variable column becomes the outcome; use
/// [`Dataset::select`] to choose a different one.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bad = |message: String| Error::BadFile {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("month") {
        return Err(bad("first header column must be `month`".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if names.is_empty() {
        return Err(bad("no variable columns".into()));
    }

    let mut rows: BTreeMap<CalendarMonth, Vec<Option<f64>>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // header is line 1
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        let raw_month = rec.get(0).unwrap_or("");
        let month: CalendarMonth = raw_month.parse().map_err(|_| Error::MalformedMonth {
            row,
            value: raw_month.to_string(),
        })?;
        if rec.len() != names.len() + 1 {
            return Err(bad(format!(
                "row {row} has {} fields, expected {}",
                rec.len(),
                names.len() + 1
            )));
        }
        let values = names
            .iter()
            .enumerate()
            .map(|(j, name)| parse_cell(&rec[j + 1], row, name))
            .collect::<Result<Vec<_>>>()?;
        if rows.insert(month, values).is_some() {
            return Err(Error::DuplicateMonth { row, month });
        }
    }

    let (&start, _) = rows
        .first_key_value()
        .ok_or_else(|| bad("no data rows".into()))?;
    let (&end, _) = rows.last_key_value().unwrap();
    let len = start.months_until(end) as usize + 1;

    let mut columns = vec![vec![None; len]; names.len()];
    let mut gaps = Vec::new();
    for idx in 0..len {
        let month = start.add_months(idx as i64);
        match rows.get(&month) {
            Some(values) => {
                for (col, v) in columns.iter_mut().zip(values) {
                    col[idx] = *v;
                }
            }
            None => gaps.push(month),
        }
    }

    let mut series: Vec<MonthlySeries> = names
        .into_iter()
        .zip(columns)
        .map(|(name, values)| MonthlySeries::new(name, start, values))
        .collect();
    let outcome = series.remove(0);
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset {
        label,
        outcome,
        covariates: series,
        gaps,
    })
}

/// Write a dataset in the ingestion format (outcome first).
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    dataset.check_aligned()?;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["month".to_string()];
    header.extend(dataset.all_series().map(|s| s.name.clone()));
    w.write_record(&header)?;
    for (i, month) in dataset.months().enumerate() {
        let mut rec = vec![month.to_string()];
        rec.extend(
            dataset
                .all_series()
                .map(|s| s.values[i].map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Affine standardization constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
    pub fit_window: Option<(CalendarMonth, CalendarMonth)>,
}

impl ScalerParams {
    pub fn fit(values: &[f64]) -> Result<Self> {
        Self::fit_named(values, "series")
    }

    fn fit_named(values: &[f64], name: &str) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidWindow(format!(
                "standardizing {name:?} needs at least 2 values, got {}",
                values.len()
            )));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n - 1.0)).sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(Error::DegenerateCovariate {
                name: name.to_string(),
            });
        }
        Ok(Self {
            mean,
            sd,
            fit_window: None,
        })
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.sd
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

pub fn standardize(values: &[f64]) -> Result<(Vec<f64>, ScalerParams)> {
    let scaler = ScalerParams::fit(values)?;
    Ok((values.iter().map(|&v| scaler.apply(v)).collect(), scaler))
}

pub fn destandardize(values: &[f64], scaler: &ScalerParams) -> Vec<f64> {
    values.iter().map(|&z| scaler.invert(z)).collect()
}

/// Lagged outcome column used as a regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct LagColumn {
    pub months: usize,
    pub values: Vec<Option<f64>>,
}

/// Everything the sampler needs, on the model scale.
///
/// The latent field spans `months`; only months flagged in `likelihood`
/// contribute observations. All per-month vectors have the field length.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedModelInput {
    months: Vec<CalendarMonth>,
    y: Vec<Option<f64>>,
    covariate_names: Vec<String>,
    covariates: Vec<Vec<Option<f64>>>,
    lag: Option<LagColumn>,
    likelihood: Vec<bool>,
    outcome_scaler: Option<ScalerParams>,
    covariate_scalers: Vec<ScalerParams>,
}

impl PreparedModelInput {
    /// Build an input directly from model-scale columns, without scaling.
    ///
    /// Every month flagged in `likelihood` must have the outcome, every
    /// covariate, and the lag (when present) observed.
    pub fn from_parts(
        start: CalendarMonth,
        y: Vec<Option<f64>>,
        covariates: Vec<(String, Vec<Option<f64>>)>,
        lag: Option<LagColumn>,
        likelihood: Vec<bool>,
    ) -> Result<Self> {
        let t = y.len();
        let (covariate_names, covariates): (Vec<_>, Vec<_>) = covariates.into_iter().unzip();
        let input = Self {
            months: (0..t).map(|i| start.add_months(i as i64)).collect(),
            y,
            covariate_names,
            covariates,
            lag,
            likelihood,
            outcome_scaler: None,
            covariate_scalers: Vec::new(),
        };
        input.validate()?;
        Ok(input)
    }

    fn validate(&self) -> Result<()> {
        let t = self.y.len();
        let lens_ok = self.likelihood.len() == t
            && self.covariates.iter().all(|c| c.len() == t)
            && self.lag.as_ref().is_none_or(|l| l.values.len() == t);
        if !lens_ok {
            return Err(Error::InvalidConfig(
                "model input columns have different lengths".into(),
            ));
        }
        for i in self.likelihood_rows() {
            let month = self.months[i];
            let missing = |column: &str| Error::MissingInWindow {
                column: column.to_string(),
                month,
            };
            if self.y[i].is_none() {
                return Err(missing("outcome"));
            }
            for (name, col) in self.covariate_names.iter().zip(&self.covariates) {
                if col[i].is_none() {
                    return Err(missing(name));
                }
            }
            if let Some(lag) = &self.lag {
                if lag.values[i].is_none() {
                    return Err(missing(&format!("outcome lag {}", lag.months)));
                }
            }
        }
        Ok(())
    }

    pub fn field_len(&self) -> usize {
        self.months.len()
    }

    pub fn months(&self) -> &[CalendarMonth] {
        &self.months
    }

    pub fn y(&self) -> &[Option<f64>] {
        &self.y
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn covariate(&self, j: usize) -> &[Option<f64>] {
        &self.covariates[j]
    }

    pub fn lag(&self) -> Option<&LagColumn> {
        self.lag.as_ref()
    }

    pub fn likelihood_mask(&self) -> &[bool] {
        &self.likelihood
    }

    pub fn likelihood_rows(&self) -> Vec<usize> {
        (0..self.likelihood.len())
            .filter(|&i| self.likelihood[i])
            .collect()
    }

    /// First and last (0-based, inclusive) field index with a likelihood term.
    pub fn likelihood_window(&self) -> Option<(usize, usize)> {
        let first = self.likelihood.iter().position(|&b| b)?;
        let last = self.likelihood.iter().rposition(|&b| b)?;
        Some((first, last))
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.len()
    }

    /// Number of regression coefficients: intercept, covariates, lag.
    pub fn n_coefficients(&self) -> usize {
        1 + self.covariates.len() + usize::from(self.lag.is_some())
    }

    pub fn coefficient_names(&self) -> Vec<String> {
        let mut names = vec!["beta0".to_string()];
        names.extend(self.covariate_names.iter().map(|n| format!("beta.{n}")));
        if self.lag.is_some() {
            names.push("gamma".into());
        }
        names
    }

    /// Regression row `[1, x_1..x_k, lag]` at field index `t`, if complete.
    pub fn design_row(&self, t: usize) -> Option<Vec<f64>> {
        let mut row = Vec::with_capacity(self.n_coefficients());
        row.push(1.0);
        for col in &self.covariates {
            row.push(col[t]?);
        }
        if let Some(lag) = &self.lag {
            row.push(lag.values[t]?);
        }
        Some(row)
    }

    pub fn outcome_scaler(&self) -> Option<&ScalerParams> {
        self.outcome_scaler.as_ref()
    }

    pub fn covariate_scalers(&self) -> &[ScalerParams] {
        &self.covariate_scalers
    }

    /// Map a raw covariate vector onto the model scale. Inputs built with
    /// [`Self::from_parts`] carry no scalers and pass values through.
    pub fn scale_covariates(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .enumerate()
            .map(|(j, &v)| self.covariate_scalers.get(j).map_or(v, |s| s.apply(v)))
            .collect()
    }

    /// Map a raw outcome value onto the model scale.
    pub fn scale_outcome(&self, raw: f64) -> f64 {
        self.outcome_scaler.map_or(raw, |s| s.apply(raw))
    }

    /// Map a model-scale outcome back to the raw scale.
    pub fn unscale_outcome(&self, z: f64) -> f64 {
        self.outcome_scaler.map_or(z, |s| s.invert(z))
    }
}

/// Prepare a model input whose latent field runs from the start of the data
/// through `train_end`, with every eligible month contributing.
pub fn prepare(
    dataset: &Dataset,
    config: &ModelConfig,
    train_end: CalendarMonth,
) -> Result<PreparedModelInput> {
    prepare_with_holdout(dataset, config, train_end, |_| false)
}

/// Like [`prepare`], but months for which `held_out` returns true are kept in
/// the latent field while being excluded from scaler fitting and the likelihood.
pub fn prepare_with_holdout(
    dataset: &Dataset,
    config: &ModelConfig,
    field_end: CalendarMonth,
    held_out: impl Fn(CalendarMonth) -> bool,
) -> Result<PreparedModelInput> {
    config.validate()?;
    dataset.check_aligned()?;
    let selected = dataset.select(&dataset.outcome.name, &config.covariates)?;
    let start = dataset.start();
    if field_end < start || field_end > dataset.end() {
        return Err(Error::InvalidWindow(format!(
            "training end {field_end} lies outside the data range {start}..{}",
            dataset.end()
        )));
    }
    let t_len = start.months_until(field_end) as usize + 1;
    let lag_k = config.lag();
    let first_row = lag_k.unwrap_or(0);
    if t_len <= first_row {
        return Err(Error::InvalidWindow(format!(
            "training end {field_end} is before month {} of the data, so no month has an observed lag",
            first_row + 1
        )));
    }

    let months: Vec<CalendarMonth> = (0..t_len).map(|i| start.add_months(i as i64)).collect();
    let training: Vec<bool> = months.iter().map(|&m| !held_out(m)).collect();
    let fit_window = (start, field_end);

    let fit_scaler = |series: &MonthlySeries| -> Result<ScalerParams> {
        let vals: Vec<f64> = (0..t_len)
            .filter(|&i| training[i])
            .filter_map(|i| series.values[i])
            .collect();
        let mut s = ScalerParams::fit_named(&vals, &series.name)?;
        s.fit_window = Some(fit_window);
        Ok(s)
    };

    let outcome_scaler = config
        .standardize_outcome
        .then(|| fit_scaler(&selected.outcome))
        .transpose()?;
    let scale_y = |v: f64| outcome_scaler.map_or(v, |s| s.apply(v));

    let covariate_scalers = selected
        .covariates
        .iter()
        .map(fit_scaler)
        .collect::<Result<Vec<_>>>()?;

    // Covariates and lag are carried for the whole field so held-out months
    // can be predicted; the outcome itself is hidden there.
    let covariates = selected
        .covariates
        .iter()
        .zip(&covariate_scalers)
        .map(|(s, sc)| {
            (
                s.name.clone(),
                s.values[..t_len].iter().map(|v| v.map(|x| sc.apply(x))).collect(),
            )
        })
        .collect::<Vec<(String, Vec<Option<f64>>)>>();

    let y_model: Vec<Option<f64>> = selected.outcome.values.iter().map(|v| v.map(scale_y)).collect();
    let lag = lag_k.map(|k| LagColumn {
        months: k,
        values: (0..t_len)
            .map(|i| if i >= k { y_model[i - k] } else { None })
            .collect(),
    });

    let likelihood: Vec<bool> = (0..t_len).map(|i| i >= first_row && training[i]).collect();
    let y = (0..t_len)
        .map(|i| if training[i] { y_model[i] } else { None })
        .collect();

    let (covariate_names, covariates): (Vec<_>, Vec<_>) = covariates.into_iter().unzip();
    let input = PreparedModelInput {
        months,
        y,
        covariate_names,
        covariates,
        lag,
        likelihood,
        outcome_scaler,
        covariate_scalers,
    };
    input.validate()?;
    Ok(input)
}
