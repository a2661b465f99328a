use proptest::prelude::*;
use rw2cf_core::data::{load_csv, prepare, write_csv};
use rw2cf_core::evaluation::{generate_synthetic, make_folds, run_cv, CvSettings, SyntheticSpec};
use rw2cf_core::rw2::{rw2_conditional, rw2_structure};
use rw2cf_core::sampler::{run_chains, summarize_coefficients, ModelConfig, SamplerSettings};
use rw2cf_core::{
    predict_counterfactual, summarize_prediction, CalendarMonth, Error, ForecastInput,
};

fn month(y: i32, m: u32) -> CalendarMonth {
    CalendarMonth::new(y, m).unwrap()
}

fn spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        start: month(2010, 7),
        months: 126,
        beta0: 5.0,
        beta: vec![0.6, -0.4],
        covariate_names: vec!["temperature".into(), "rainfall".into()],
        gamma: 0.3,
        lag_months: 12,
        v: 0.05,
        v_e: 0.002,
        seasonal_share: 0.5,
        covariate_center: 12.0,
        covariate_scale: 4.0,
        outcome_name: "hires".into(),
        seed,
    }
}

fn quick() -> SamplerSettings {
    SamplerSettings {
        chains: 2,
        iterations: 1200,
        burn_in: 400,
        thin: 4,
        ..SamplerSettings::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_conditionals_match_dense_structure(
        len in 5usize..=12,
        seed in any::<u64>(),
        v_e in 0.01f64..10.0,
    ) {
        let u: Vec<f64> = (0..len)
            .map(|i| ((seed.wrapping_mul(i as u64 + 7) % 2000) as f64 / 1000.0) - 1.0)
            .collect();
        let k = rw2_structure(len).unwrap();
        for t in 0..len {
            let (m, v) = rw2_conditional(&u, t, v_e).unwrap();
            let (dm, dv) = k.conditional(&u, t, v_e);
            prop_assert!((m - dm).abs() < 1e-12);
            prop_assert!((v - dv).abs() < 1e-12);
        }
    }
}

#[test]
fn synthetic_csv_round_trips_through_loader() {
    let ds = generate_synthetic(&spec(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf).unwrap();
    std::fs::write(&path, &buf).unwrap();
    let back = load_csv(&path).unwrap();
    assert_eq!(back.outcome.values, ds.outcome.values);
    assert_eq!(back.covariates, ds.covariates);
    assert!(back.gaps.is_empty());
}

#[test]
fn fit_then_predict_on_synthetic_series() {
    let s = spec(4);
    let ds = generate_synthetic(&s).unwrap();
    let cfg = ModelConfig::new(s.covariate_names.clone(), true);
    let input = prepare(&ds, &cfg, month(2020, 2)).unwrap();
    // Jul 2010 .. Feb 2020, likelihood from Jul 2011
    assert_eq!(input.field_len(), 116);
    assert_eq!(input.likelihood_rows().len(), 104);

    let draws = run_chains(&input, &cfg, &quick()).unwrap();
    assert_eq!(draws.len(), 400);
    let coefs = summarize_coefficients(&draws);
    let names: Vec<&str> = coefs.iter().map(|c| c.parameter.as_str()).collect();
    assert_eq!(names, ["beta0", "beta.temperature", "beta.rainfall", "gamma"]);
    assert!(coefs[1].median > 0.0 && coefs[2].median < 0.0);

    let forecast = ForecastInput::from_dataset(&ds, &input, month(2020, 12)).unwrap();
    let pred = predict_counterfactual(&draws, &input, &forecast, 1).unwrap();
    let summary = summarize_prediction(&pred, &forecast.observed);
    assert_eq!(summary.months.len(), 10);
    // No intervention in the generator: most months should be unremarkable.
    let covered = summary
        .months
        .iter()
        .filter(|m| m.prediction.contains(m.observed.unwrap()))
        .count();
    assert!(covered >= 8, "{covered}/10 observed inside predictive intervals");
}

#[test]
fn cross_validation_is_deterministic_and_scores_every_fold() {
    let ds = generate_synthetic(&spec(5)).unwrap();
    let cfg = ModelConfig::new(vec!["temperature".into(), "rainfall".into()], false);
    let cv = CvSettings::default();
    let a = run_cv(&ds, &cfg, &quick(), &cv).unwrap();
    let b = run_cv(&ds, &cfg, &quick(), &cv).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.report.folds.len(), 10);
    // 2010 has no lagged outcome, 2011 only from July on.
    assert_eq!(a.report.folds[0].n_test, 0);
    assert_eq!(a.report.folds[1].n_test, 6);
    assert_eq!(a.report.pooled.n_test, 6 + 8 * 12);
    assert_eq!(a.report.predictors, 3);
    let cov = a.report.pooled.coverage95.unwrap();
    assert!(cov > 0.8, "pooled coverage {cov}");

    let folds = make_folds(&ds, &cv.years).unwrap();
    assert_eq!(folds.len(), 10);
}

#[test]
fn cv_rejects_years_outside_the_data() {
    let ds = generate_synthetic(&spec(6)).unwrap();
    let cfg = ModelConfig::new(vec![], false);
    let cv = CvSettings {
        years: vec![2005, 2012],
        include_partial_years: true,
    };
    assert!(matches!(
        run_cv(&ds, &cfg, &quick(), &cv),
        Err(Error::YearAbsent(2005))
    ));
}

#[test]
fn missing_covariate_inside_window_is_an_error() {
    let mut ds = generate_synthetic(&spec(7)).unwrap();
    ds.covariates[0].values[30] = None;
    let cfg = ModelConfig::new(vec!["temperature".into()], false);
    assert!(matches!(
        prepare(&ds, &cfg, month(2020, 2)),
        Err(Error::MissingInWindow { .. })
    ));
}
