use super::*;
use crate::data::{LagColumn, PreparedModelInput};
use crate::sampler::{Draw, ModelState};
use crate::stats::{mean, variance};

fn m(y: i32, mo: u32) -> CalendarMonth {
    CalendarMonth::new(y, mo).unwrap()
}

/// Six-month field, one covariate and a lag-1 regressor, all on the model scale.
fn input() -> PreparedModelInput {
    let y: Vec<Option<f64>> = (0..6).map(|i| Some(i as f64)).collect();
    let x = (0..6).map(|i| Some(0.1 * i as f64)).collect();
    let lag = LagColumn {
        months: 1,
        values: (0..6).map(|i| (i >= 1).then(|| (i - 1) as f64)).collect(),
    };
    let mask = (0..6).map(|i| i >= 1).collect();
    PreparedModelInput::from_parts(m(2019, 1), y, vec![("x".into(), x)], Some(lag), mask).unwrap()
}

fn draws_of(states: Vec<ModelState>) -> PosteriorDraws {
    PosteriorDraws {
        coefficient_names: vec!["beta0".into(), "beta.x".into(), "gamma".into()],
        field_len: 6,
        chains: 1,
        draws: states
            .into_iter()
            .enumerate()
            .map(|(i, state)| Draw {
                chain: 0,
                iteration: i,
                state,
            })
            .collect(),
        acceptance_rate: 1.0,
    }
}

fn sharp_state() -> ModelState {
    ModelState {
        coefficients: vec![1.0, 2.0, 0.5],
        u: vec![0.0, 0.0, 0.0, 0.0, 0.1, 0.3],
        tau: 1e16,
        tau_e: 1e16,
    }
}

fn forecast(h: usize) -> ForecastInput {
    ForecastInput {
        months: (0..h).map(|i| m(2019, 7 + i as u32)).collect(),
        covariates: (0..h).map(|i| vec![1.0 + i as f64]).collect(),
        lag: (0..h).map(|i| Some(10.0 * (i + 1) as f64)).collect(),
        observed: vec![None; h],
    }
}

#[test]
fn single_draw_prediction_by_hand() {
    // Trend continues linearly: 0.5, 0.7. Linear predictor:
    // h=1: 1 + 2·1 + 0.5·10 + 0.5 = 8.5
    // h=2: 1 + 2·2 + 0.5·20 + 0.7 = 15.7
    let p = predict_counterfactual(&draws_of(vec![sharp_state()]), &input(), &forecast(2), 1).unwrap();
    assert_eq!(p.months, [m(2019, 7), m(2019, 8)]);
    assert!((p.values[0][0] - 8.5).abs() < 1e-6);
    assert!((p.values[1][0] - 15.7).abs() < 1e-6);
}

#[test]
fn forward_variance_grows_as_rw2() {
    // With negligible observation noise, the two-step-ahead spread is 5·v_e.
    let v_e = 0.04;
    let state = ModelState {
        tau_e: 1.0 / v_e,
        ..sharp_state()
    };
    let n = 40_000;
    let p = predict_counterfactual(&draws_of(vec![state; n]), &input(), &forecast(2), 9).unwrap();
    assert!((variance(&p.values[0]) / v_e - 1.0).abs() < 0.04);
    assert!((variance(&p.values[1]) / (5.0 * v_e) - 1.0).abs() < 0.04);
    assert!((mean(&p.values[1]) - 15.7).abs() < 4.0 * (5.0 * v_e / n as f64).sqrt());
}

#[test]
fn prediction_is_reproducible() {
    let state = ModelState {
        tau: 4.0,
        tau_e: 25.0,
        ..sharp_state()
    };
    let d = draws_of(vec![state; 50]);
    let a = predict_counterfactual(&d, &input(), &forecast(3), 7).unwrap();
    let b = predict_counterfactual(&d, &input(), &forecast(3), 7).unwrap();
    let c = predict_counterfactual(&d, &input(), &forecast(3), 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn rejects_gaps_and_mismatched_draws() {
    let d = draws_of(vec![sharp_state()]);
    let mut f = forecast(2);
    f.months[0] = m(2019, 8);
    assert!(matches!(
        predict_counterfactual(&d, &input(), &f, 1),
        Err(Error::InvalidWindow(_))
    ));
    let mut short = d.clone();
    short.field_len = 5;
    assert!(matches!(
        predict_counterfactual(&short, &input(), &forecast(1), 1),
        Err(Error::IncompatibleDraws(_))
    ));
    let mut renamed = d;
    renamed.coefficient_names[1] = "beta.z".into();
    assert!(matches!(
        predict_counterfactual(&renamed, &input(), &forecast(1), 1),
        Err(Error::IncompatibleDraws(_))
    ));
}

#[test]
fn excess_is_observed_minus_prediction() {
    let pred = PredictiveDraws {
        months: vec![m(2020, 3)],
        values: vec![vec![7.0, 8.0, 9.0]],
    };
    let s = summarize_prediction(&pred, &[Some(10.0)]);
    let e = s.months[0].excess.unwrap();
    assert_eq!(e.median, 2.0);
    assert!((e.lower - 1.05).abs() < 1e-12);
    assert!((e.upper - 2.95).abs() < 1e-12);
    assert_eq!(s.months[0].flag, Some(Significance::Increase));
}

#[test]
fn excess_interval_mirrors_prediction_interval() {
    let values: Vec<f64> = (0..401).map(|i| ((i * 37) % 401) as f64 * 0.013 - 1.1).collect();
    let pred = PredictiveDraws {
        months: vec![m(2020, 4)],
        values: vec![values],
    };
    let obs = 3.3;
    let s = summarize_prediction(&pred, &[Some(obs)]);
    let (p, e) = (s.months[0].prediction, s.months[0].excess.unwrap());
    assert!((e.median - (obs - p.median)).abs() < 1e-12);
    assert!((e.lower - (obs - p.upper)).abs() < 1e-12);
    assert!((e.upper - (obs - p.lower)).abs() < 1e-12);
}

#[test]
fn unobserved_months_have_no_excess() {
    let pred = PredictiveDraws {
        months: vec![m(2020, 3), m(2020, 4)],
        values: vec![vec![1.0, 2.0], vec![1.0, 2.0]],
    };
    let s = summarize_prediction(&pred, &[Some(1.5), None]);
    assert!(s.months[0].excess.is_some());
    assert_eq!(s.months[1].excess, None);
    assert_eq!(s.months[1].flag, None);
}

#[test]
fn flags_from_reported_intervals() {
    let iv = |lower, upper| Interval95 {
        median: (lower + upper) / 2.0,
        lower,
        upper,
    };
    assert_eq!(flag_significance(&iv(-525787.0, -202016.0)), Significance::Decrease);
    assert_eq!(flag_significance(&iv(-1.72, 4.44)), Significance::Indistinguishable);
    assert_eq!(flag_significance(&iv(12.97, 19.8)), Significance::Increase);
    assert_eq!(flag_significance(&iv(0.0, 1.0)), Significance::Indistinguishable);
    for f in [Significance::Decrease, Significance::Increase, Significance::Indistinguishable] {
        assert_eq!(Significance::parse(f.as_str()), Some(f));
    }
}

#[test]
fn csv_round_trip() {
    let pred = PredictiveDraws {
        months: vec![m(2020, 3), m(2020, 4)],
        values: vec![vec![1.0, 2.5, 3.0], vec![-1.0, 0.25, 4.0]],
    };
    let s = summarize_prediction(&pred, &[Some(0.1), None]);
    let mut buf = Vec::new();
    write_counterfactual_csv(&s, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with(&COUNTERFACTUAL_COLUMNS.join(",")));
    assert_eq!(read_counterfactual_csv(&buf[..]).unwrap(), s);
    assert!(read_counterfactual_csv("month,observed\n".as_bytes()).is_err());
}

#[test]
fn forecast_input_from_dataset() {
    use crate::data::{prepare, Dataset, MonthlySeries};
    use crate::sampler::ModelConfig;
    let n = 30;
    let y: Vec<f64> = (0..n).map(|i| 100.0 + i as f64).collect();
    let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let ds = Dataset {
        label: "d".into(),
        outcome: MonthlySeries::from_values("y", m(2018, 1), &y),
        covariates: vec![MonthlySeries::from_values("x", m(2018, 1), &x)],
        gaps: vec![],
    };
    let cfg = ModelConfig::new(vec!["x".into()], true);
    let input = prepare(&ds, &cfg, m(2019, 12)).unwrap();
    let f = ForecastInput::from_dataset(&ds, &input, m(2020, 3)).unwrap();
    assert_eq!(f.months, [m(2020, 1), m(2020, 2), m(2020, 3)]);
    assert_eq!(f.covariates[0], [x[24]]);
    assert_eq!(f.lag[2], Some(y[14]));
    assert_eq!(f.observed[1], Some(y[25]));
    assert!(ForecastInput::from_dataset(&ds, &input, m(2019, 12)).is_err());
    assert!(ForecastInput::from_dataset(&ds, &input, m(2020, 7)).is_err());
}
