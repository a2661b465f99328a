//! Split R-hat and effective sample size.
//!
//! Both follow the multi-chain definitions used by Stan: chains are split in
//! half, R-hat compares between- and within-half variances, and ESS uses
//! Geyer's initial monotone sequence on the combined autocorrelation.

use serde::{Deserialize, Serialize};

use super::PosteriorDraws;

pub const RHAT_WARNING_THRESHOLD: f64 = 1.05;

fn split_halves<'a>(chains: &[&'a [f64]]) -> Vec<&'a [f64]> {
    let mut out = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        let half = c.len() / 2;
        out.push(&c[..half]);
        out.push(&c[c.len() - half..]);
    }
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// (W, var_plus) for equal-length chains, or None if degenerate.
fn variance_components(chains: &[&[f64]]) -> Option<(f64, f64)> {
    let m = chains.len();
    let n = chains.first()?.len();
    if m < 2 || n < 2 {
        return None;
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let b = n as f64 / (m as f64 - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n as f64 - 1.0))
        .sum::<f64>()
        / m as f64;
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    (w > 0.0 && var_plus.is_finite()).then_some((w, var_plus))
}

/// Split R-hat. `None` when fewer than two chains are given or the draws
/// have zero within-chain variance.
pub fn split_rhat(chains: &[&[f64]]) -> Option<f64> {
    if chains.len() < 2 {
        return None;
    }
    let (w, var_plus) = variance_components(&split_halves(chains))?;
    Some((var_plus / w).sqrt())
}

fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let mu = mean(x);
    (0..n - lag).map(|i| (x[i] - mu) * (x[i + lag] - mu)).sum::<f64>() / n as f64
}

/// Bulk effective sample size over all chains (split in halves when there
/// are at least two draws per chain).
pub fn effective_sample_size(chains: &[&[f64]]) -> Option<f64> {
    let halves = split_halves(chains);
    let parts: Vec<&[f64]> = if halves.first().is_some_and(|h| h.len() >= 4) {
        halves
    } else {
        chains.to_vec()
    };
    let m = parts.len();
    let n = parts.first()?.len();
    if n < 4 {
        return None;
    }
    let (w, var_plus) = if m >= 2 {
        variance_components(&parts)?
    } else {
        let v = autocovariance(parts[0], 0) * n as f64 / (n as f64 - 1.0);
        if !(v > 0.0) {
            return None;
        }
        (v, v)
    };

    let rho = |lag: usize| -> f64 {
        let mean_acov = parts.iter().map(|c| autocovariance(c, lag)).sum::<f64>() / m as f64;
        // within-chain autocovariances are normalized by n; W uses n - 1
        1.0 - (w - mean_acov) / var_plus
    };

    let mut sum_pairs = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let rho0 = if lag == 0 { 1.0 } else { rho(lag) };
        let pair = rho0 + rho(lag + 1);
        if pair < 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        sum_pairs += pair;
        prev_pair = pair;
        lag += 2;
    }
    let tau = (-1.0 + 2.0 * sum_pairs).max(1.0 / ((m * n) as f64).log10().max(1.0));
    Some((m * n) as f64 / tau)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDiagnostics {
    pub parameter: String,
    /// `None` means not applicable (one chain, or zero variance).
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub chains: usize,
    pub draws_per_chain: usize,
    /// False when fewer than two chains were run.
    pub rhat_available: bool,
    pub acceptance_rate: f64,
    pub parameters: Vec<ParameterDiagnostics>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn max_rhat(&self) -> Option<f64> {
        self.parameters
            .iter()
            .filter_map(|p| p.rhat)
            .max_by(f64::total_cmp)
    }

    pub fn get(&self, parameter: &str) -> Option<&ParameterDiagnostics> {
        self.parameters.iter().find(|p| p.parameter == parameter)
    }
}

/// Diagnostics for every scalar parameter of a multi-chain run.
pub fn diagnose(draws: &PosteriorDraws) -> Diagnostics {
    let names = draws.parameter_names();
    let draws_per_chain = if draws.chains == 0 {
        0
    } else {
        draws.len() / draws.chains
    };
    let mut parameters = Vec::with_capacity(names.len());
    let mut warnings = Vec::new();
    if draws.chains < 2 {
        warnings.push("fewer than two chains: R-hat unavailable".to_string());
    }
    for (i, name) in names.into_iter().enumerate() {
        let traces = draws.traces(i);
        let refs: Vec<&[f64]> = traces.iter().map(Vec::as_slice).collect();
        let rhat = split_rhat(&refs);
        if let Some(r) = rhat {
            if r > RHAT_WARNING_THRESHOLD {
                warnings.push(format!("R-hat for {name} is {r:.3} (> {RHAT_WARNING_THRESHOLD})"));
            }
        }
        parameters.push(ParameterDiagnostics {
            parameter: name,
            rhat,
            ess: effective_sample_size(&refs),
        });
    }
    Diagnostics {
        chains: draws.chains,
        draws_per_chain,
        rhat_available: draws.chains >= 2,
        acceptance_rate: draws.acceptance_rate,
        parameters,
        warnings,
    }
}
