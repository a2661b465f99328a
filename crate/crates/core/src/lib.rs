//! Bayesian regression with an intrinsic second-order random-walk trend for
//! monthly series, fitted by Gibbs sampling, with posterior-predictive
//! counterfactuals and observed-minus-predicted excess.

pub mod counterfactual;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod month;
pub mod rw2;
pub mod sampler;
pub mod stats;

pub use counterfactual::{
    flag_significance, predict_counterfactual, read_counterfactual_csv, summarize_prediction,
    write_counterfactual_csv, CounterfactualSummary, ForecastInput, MonthSummary,
    PredictiveDraws, Significance,
};
pub use data::{load_csv, prepare, prepare_with_holdout, Dataset, MonthlySeries, PreparedModelInput};
pub use error::{Error, Result};
pub use month::CalendarMonth;
pub use sampler::{
    diagnose, run_chains, LatentUpdate, ModelConfig, ModelState, PosteriorDraws, SamplerSettings,
};
pub use stats::Interval95;
