use std::fs;
use std::path::{Path, PathBuf};

use rw2cf_core::evaluation::CvSettings;
use rw2cf_core::sampler::{LatentUpdate, ModelConfig, SamplerSettings};
use rw2cf_core::CalendarMonth;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Chain settings; the seed lives at the top level of [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub latent_update: LatentUpdate,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let s = SamplerSettings::default();
        Self {
            chains: s.chains,
            iterations: s.iterations,
            burn_in: s.burn_in,
            thin: s.thin,
            latent_update: s.latent_update,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub coef_variance: f64,
    pub gamma_shape: f64,
    pub gamma_rate: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            coef_variance: m.prior_coef_variance,
            gamma_shape: m.prior_gamma_shape,
            gamma_rate: m.prior_gamma_rate,
        }
    }
}

fn default_true() -> bool {
    true
}
fn default_lag() -> usize {
    12
}
fn default_seed() -> u64 {
    SamplerSettings::default().seed
}

/// Everything that affects the numbers of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// CSV path, relative to the config file.
    pub data: PathBuf,
    pub outcome: String,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default = "default_true")]
    pub use_lag12: bool,
    #[serde(default = "default_lag")]
    pub lag_months: usize,
    #[serde(default)]
    pub standardize_outcome: bool,
    #[serde(default)]
    pub priors: PriorSection,
    pub train_end: CalendarMonth,
    pub horizon_end: CalendarMonth,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub cv: CvSettings,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory, relative to the config file.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.train_end >= self.horizon_end {
            return Err(CliError::Validation(format!(
                "train_end {} must precede horizon_end {}",
                self.train_end, self.horizon_end
            )));
        }
        self.model().validate()?;
        self.sampler_settings().validate()?;
        Ok(())
    }

    pub fn data_path(&self) -> PathBuf {
        self.base_dir.join(&self.data)
    }

    /// `--out` wins, then `out_dir`, then `out` next to the config.
    pub fn out_dir(&self, cli_out: Option<&Path>) -> PathBuf {
        match (cli_out, &self.out_dir) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(p)) => self.base_dir.join(p),
            (None, None) => self.base_dir.join("out"),
        }
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            covariates: self.covariates.clone(),
            use_lag12: self.use_lag12,
            lag_months: self.lag_months,
            standardize_outcome: self.standardize_outcome,
            prior_coef_variance: self.priors.coef_variance,
            prior_gamma_shape: self.priors.gamma_shape,
            prior_gamma_rate: self.priors.gamma_rate,
        }
    }

    pub fn sampler_settings(&self) -> SamplerSettings {
        SamplerSettings {
            chains: self.sampler.chains,
            iterations: self.sampler.iterations,
            burn_in: self.sampler.burn_in,
            thin: self.sampler.thin,
            seed: self.seed,
            latent_update: self.sampler.latent_update,
        }
    }
}
