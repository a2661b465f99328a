//! Gibbs sampling for the RW2 regression model, chain management and
//! posterior summaries.

mod banded;
mod diagnostics;
mod draws_io;
mod gibbs;
mod summary;

pub use diagnostics::{diagnose, effective_sample_size, split_rhat, Diagnostics, ParameterDiagnostics};
pub use draws_io::{read_draws_csv, write_draws_csv};
pub use gibbs::GibbsModel;
pub use summary::{summarize_coefficients, summarize_parameters, ParameterSummary};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::PreparedModelInput;
use crate::error::{Error, Result};

/// Model specification: which regressors enter and the prior hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub covariates: Vec<String>,
    pub use_lag12: bool,
    /// Lag (in months) of the outcome regressor; 12 unless overridden.
    pub lag_months: usize,
    pub standardize_outcome: bool,
    pub prior_coef_variance: f64,
    pub prior_gamma_shape: f64,
    pub prior_gamma_rate: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            covariates: Vec::new(),
            use_lag12: true,
            lag_months: 12,
            standardize_outcome: false,
            prior_coef_variance: 1000.0,
            prior_gamma_shape: 1.0,
            prior_gamma_rate: 0.01,
        }
    }
}

impl ModelConfig {
    pub fn new(covariates: Vec<String>, standardize_outcome: bool) -> Self {
        Self {
            covariates,
            standardize_outcome,
            ..Self::default()
        }
    }

    /// Monthly hire counts: temperature, rainfall and wind, standardized outcome.
    pub fn tfl_hires() -> Self {
        Self::new(
            vec!["temperature".into(), "rainfall".into(), "wind".into()],
            true,
        )
    }

    /// Average hire time in minutes: temperature and humidity, raw outcome.
    pub fn tfl_hire_time() -> Self {
        Self::new(vec!["temperature".into(), "humidity".into()], false)
    }

    pub fn lag(&self) -> Option<usize> {
        self.use_lag12.then_some(self.lag_months)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("prior_coef_variance", self.prior_coef_variance),
            ("prior_gamma_shape", self.prior_gamma_shape),
            ("prior_gamma_rate", self.prior_gamma_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.use_lag12 && self.lag_months == 0 {
            return Err(Error::InvalidConfig("lag_months must be at least 1".into()));
        }
        Ok(())
    }
}

/// How the latent field is refreshed within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentUpdate {
    /// One component at a time in a freshly permuted order.
    SingleSite,
    /// The whole field at once from its banded Gaussian full conditional.
    /// When that conditional is improper (fewer than two observed months)
    /// all but the first two sites are drawn jointly given those two.
    Block,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub latent_update: LatentUpdate,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            chains: 4,
            iterations: 20_000,
            burn_in: 10_000,
            thin: 10,
            seed: 20200301,
            latent_update: LatentUpdate::Block,
        }
    }
}

impl SamplerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::InvalidConfig("at least one chain is required".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidConfig(format!(
                "burn_in ({}) must be less than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        if self.draws_per_chain() == 0 {
            return Err(Error::InvalidConfig(
                "thinning leaves no retained draws".into(),
            ));
        }
        Ok(())
    }

    pub fn draws_per_chain(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    fn retains(&self, iteration: usize) -> bool {
        iteration >= self.burn_in && (iteration - self.burn_in + 1) % self.thin == 0
    }
}

/// One point of the Markov chain. `coefficients` is `[beta0, beta.., gamma]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub coefficients: Vec<f64>,
    pub u: Vec<f64>,
    pub tau: f64,
    pub tau_e: f64,
}

impl ModelState {
    pub fn beta0(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients.iter().chain(&self.u).all(|v| v.is_finite())
            && self.tau.is_finite()
            && self.tau > 0.0
            && self.tau_e.is_finite()
            && self.tau_e > 0.0
    }
}

/// A retained state with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub chain: usize,
    pub iteration: usize,
    pub state: ModelState,
}

/// Retained draws from one or more chains, ordered by chain then iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub coefficient_names: Vec<String>,
    pub field_len: usize,
    pub chains: usize,
    pub draws: Vec<Draw>,
    /// Gibbs moves are always accepted; kept for parity with MH samplers.
    pub acceptance_rate: f64,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Names of every scalar parameter, in column order.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = self.coefficient_names.clone();
        names.push("tau".into());
        names.push("tau_e".into());
        names.extend((1..=self.field_len).map(|i| format!("u.{i}")));
        names
    }

    /// Value of parameter `index` (in [`Self::parameter_names`] order).
    pub fn parameter_value(&self, draw: &Draw, index: usize) -> f64 {
        let k = self.coefficient_names.len();
        match index {
            i if i < k => draw.state.coefficients[i],
            i if i == k => draw.state.tau,
            i if i == k + 1 => draw.state.tau_e,
            i => draw.state.u[i - k - 2],
        }
    }

    /// Per-chain traces of one parameter.
    pub fn traces(&self, index: usize) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.chains];
        for d in &self.draws {
            out[d.chain].push(self.parameter_value(d, index));
        }
        out
    }

    pub fn coefficient_index(&self, name: &str) -> Option<usize> {
        self.coefficient_names.iter().position(|n| n == name)
    }

    pub fn coefficient_draws(&self, index: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.state.coefficients[index]).collect()
    }
}

fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Run one chain. Deterministic given `settings.seed` and `chain`.
pub fn run_chain(model: &GibbsModel, settings: &SamplerSettings, chain: usize) -> Result<Vec<Draw>> {
    settings.validate()?;
    let mut rng = chain_rng(settings.seed, chain);
    let jitter = if chain == 0 { 0.0 } else { 1.0 };
    let mut state = model.initial_state(jitter, &mut rng);
    let mut kept = Vec::with_capacity(settings.draws_per_chain());
    for iteration in 0..settings.iterations {
        model.sweep(&mut state, settings.latent_update, &mut rng)?;
        if !state.is_finite() {
            return Err(Error::NonFinite { chain, iteration });
        }
        if settings.retains(iteration) {
            kept.push(Draw {
                chain,
                iteration,
                state: state.clone(),
            });
        }
    }
    Ok(kept)
}

/// Run all chains (concurrently) and merge their draws in chain order.
pub fn run_chains(
    input: &PreparedModelInput,
    config: &ModelConfig,
    settings: &SamplerSettings,
) -> Result<PosteriorDraws> {
    settings.validate()?;
    let model = GibbsModel::new(input, config)?;
    let per_chain: Vec<Result<Vec<Draw>>> = (0..settings.chains)
        .into_par_iter()
        .map(|c| run_chain(&model, settings, c))
        .collect();
    let mut draws = Vec::with_capacity(settings.chains * settings.draws_per_chain());
    for chain in per_chain {
        draws.extend(chain?);
    }
    Ok(PosteriorDraws {
        coefficient_names: input.coefficient_names(),
        field_len: input.field_len(),
        chains: settings.chains,
        draws,
        acceptance_rate: 1.0,
    })
}

#[cfg(test)]
mod tests;
