use serde::{Deserialize, Serialize};

use super::PosteriorDraws;
use crate::stats::Interval95;

/// Posterior median and 95% credible interval of one scalar parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub parameter: String,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ParameterSummary {
    pub fn from_draws(parameter: impl Into<String>, values: &[f64]) -> Self {
        let ci = Interval95::from_draws(values);
        Self {
            parameter: parameter.into(),
            median: ci.median,
            lower: ci.lower,
            upper: ci.upper,
        }
    }

    pub fn covers(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Regression coefficients on the model scale (standardized covariates).
pub fn summarize_coefficients(draws: &PosteriorDraws) -> Vec<ParameterSummary> {
    assert!(!draws.is_empty(), "cannot summarize an empty posterior");
    draws
        .coefficient_names
        .iter()
        .enumerate()
        .map(|(j, name)| ParameterSummary::from_draws(name.clone(), &draws.coefficient_draws(j)))
        .collect()
}

/// Coefficients followed by the two precisions.
pub fn summarize_parameters(draws: &PosteriorDraws) -> Vec<ParameterSummary> {
    let mut out = summarize_coefficients(draws);
    let k = draws.coefficient_names.len();
    for (offset, name) in ["tau", "tau_e"].into_iter().enumerate() {
        let values: Vec<f64> = draws
            .draws
            .iter()
            .map(|d| draws.parameter_value(d, k + offset))
            .collect();
        out.push(ParameterSummary::from_draws(name, &values));
    }
    out
}
