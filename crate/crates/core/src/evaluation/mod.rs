//! Fit quality: metrics, leave-one-year-out cross-validation and synthetic data.

mod cv;
pub mod metrics;
pub mod synthetic;

pub use cv::{
    make_folds, make_folds_with, run_cv, CvFold, CvOutcome, CvReport, CvSettings, FoldReport,
    PooledReport,
};
pub use metrics::{adjusted_r2, coverage95};
pub use synthetic::{generate_synthetic, generate_synthetic_with_truth, SyntheticData, SyntheticSpec};
