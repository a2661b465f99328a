//! Synthetic monthly data drawn from the model family itself.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, MonthlySeries, ScalerParams};
use crate::error::{Error, Result};
use crate::month::CalendarMonth;

/// True parameters and generator settings.
///
/// Covariates are a 12-month sinusoid with a random phase plus white noise,
/// mixed so that `seasonal_share` of the unit variance is seasonal. The
/// regression acts on the covariates standardized over the generated
/// window; the file stores `covariate_center + covariate_scale · z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub start: CalendarMonth,
    pub months: usize,
    pub beta0: f64,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub covariate_names: Vec<String>,
    pub gamma: f64,
    #[serde(default = "default_lag")]
    pub lag_months: usize,
    /// Observation variance.
    pub v: f64,
    /// RW2 innovation variance.
    pub v_e: f64,
    #[serde(default = "default_share")]
    pub seasonal_share: f64,
    #[serde(default)]
    pub covariate_center: f64,
    #[serde(default = "default_scale")]
    pub covariate_scale: f64,
    #[serde(default = "default_outcome")]
    pub outcome_name: String,
    pub seed: u64,
}

fn default_lag() -> usize {
    12
}
fn default_share() -> f64 {
    0.5
}
fn default_scale() -> f64 {
    1.0
}
fn default_outcome() -> String {
    "y".into()
}

impl SyntheticSpec {
    pub fn covariate_name(&self, j: usize) -> String {
        self.covariate_names
            .get(j)
            .cloned()
            .unwrap_or_else(|| format!("x{}", j + 1))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.months < 30 {
            return fail(format!("synthetic series needs at least 30 months, got {}", self.months));
        }
        if !(self.v >= 0.0 && self.v_e >= 0.0) {
            return fail("variances must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.seasonal_share) {
            return fail("seasonal_share must lie in [0, 1]".into());
        }
        if !(self.covariate_scale > 0.0) {
            return fail("covariate_scale must be positive".into());
        }
        if self.lag_months == 0 {
            return fail("lag_months must be at least 1".into());
        }
        if !self.covariate_names.is_empty() && self.covariate_names.len() != self.beta.len() {
            return fail("covariate_names must match beta in length".into());
        }
        let all = [self.beta0, self.gamma, self.v, self.v_e]
            .into_iter()
            .chain(self.beta.iter().copied());
        for v in all {
            if !v.is_finite() {
                return fail("parameters must be finite".into());
            }
        }
        Ok(())
    }
}

/// The generated dataset plus the latent quantities behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// Standardized covariates actually used in the linear predictor.
    pub covariates_std: Vec<Vec<f64>>,
    pub u: Vec<f64>,
}

impl SyntheticData {
    /// Intercept comparable to a fit whose field is centred over `window`
    /// (0-based, half-open): `beta0 + mean(u[window])`.
    pub fn centred_intercept(&self, spec: &SyntheticSpec, window: std::ops::Range<usize>) -> f64 {
        let u = &self.u[window];
        spec.beta0 + u.iter().sum::<f64>() / u.len() as f64
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    Ok(generate_synthetic_with_truth(spec)?.dataset)
}

pub fn generate_synthetic_with_truth(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let n = spec.months;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let amp = (2.0 * spec.seasonal_share).sqrt();
    let noise = (1.0 - spec.seasonal_share).sqrt();
    let mut covariates_std = Vec::with_capacity(spec.beta.len());
    for _ in &spec.beta {
        let phase = rng.random_range(0.0..2.0 * PI);
        let raw: Vec<f64> = (0..n)
            .map(|t| {
                let month = spec.start.add_months(t as i64).month() as f64;
                amp * (2.0 * PI * month / 12.0 + phase).sin() + noise * normal(&mut rng)
            })
            .collect();
        let z = match ScalerParams::fit(&raw) {
            Ok(s) => raw.iter().map(|&v| s.apply(v)).collect(),
            Err(_) => raw,
        };
        covariates_std.push(z);
    }

    let sd_e = spec.v_e.sqrt();
    let mut u = vec![0.0; n];
    for t in 2..n {
        u[t] = 2.0 * u[t - 1] - u[t - 2] + sd_e * normal(&mut rng);
    }

    let sd = spec.v.sqrt();
    let k = spec.lag_months;
    let mut y = vec![0.0; n];
    for t in 0..n {
        let mut lambda = spec.beta0 + u[t];
        for (b, z) in spec.beta.iter().zip(&covariates_std) {
            lambda += b * z[t];
        }
        if t >= k {
            lambda += spec.gamma * y[t - k];
        }
        y[t] = lambda + sd * normal(&mut rng);
    }

    let covariates = covariates_std
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let raw: Vec<f64> = z
                .iter()
                .map(|v| spec.covariate_center + spec.covariate_scale * v)
                .collect();
            MonthlySeries::from_values(spec.covariate_name(j), spec.start, &raw)
        })
        .collect();
    let dataset = Dataset {
        label: format!("synthetic-{}", spec.seed),
        outcome: MonthlySeries::from_values(spec.outcome_name.clone(), spec.start, &y),
        covariates,
        gaps: Vec::new(),
    };
    Ok(SyntheticData {
        dataset,
        covariates_std,
        u,
    })
}
