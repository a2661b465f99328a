use super::*;
use crate::data::LagColumn;
use crate::month::CalendarMonth;
use crate::stats::{mean, variance};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn start() -> CalendarMonth {
    CalendarMonth::new(2000, 1).unwrap()
}

/// Field of `n` months, one covariate, no lag; `observed` picks likelihood rows.
fn small_input(n: usize, observed: impl Fn(usize) -> bool) -> PreparedModelInput {
    let x: Vec<Option<f64>> = (0..n).map(|i| Some((i as f64 * 0.7).sin())).collect();
    let y: Vec<Option<f64>> = (0..n)
        .map(|i| observed(i).then(|| 1.0 + 0.5 * (i as f64 * 0.7).sin() + 0.05 * i as f64))
        .collect();
    let mask = (0..n).map(&observed).collect();
    PreparedModelInput::from_parts(start(), y, vec![("x".into(), x)], None, mask).unwrap()
}

fn config(covs: &[&str]) -> ModelConfig {
    ModelConfig {
        covariates: covs.iter().map(|s| s.to_string()).collect(),
        use_lag12: false,
        ..ModelConfig::default()
    }
}

fn state(model: &GibbsModel, tau: f64, tau_e: f64) -> ModelState {
    ModelState {
        coefficients: vec![0.0; model.n_coefficients()],
        u: vec![0.0; model.field_len()],
        tau,
        tau_e,
    }
}

#[test]
fn settings_bookkeeping() {
    let s = SamplerSettings {
        chains: 2,
        iterations: 10,
        burn_in: 9,
        thin: 1,
        ..SamplerSettings::default()
    };
    assert_eq!(s.draws_per_chain(), 1);
    let input = small_input(8, |_| true);
    let draws = run_chains(&input, &config(&["x"]), &s).unwrap();
    assert_eq!(draws.len(), 2);
    assert!(draws.draws.iter().all(|d| d.iteration == 9));
    assert_eq!(draws.draws[0].chain, 0);
    assert_eq!(draws.draws[1].chain, 1);

    let d = SamplerSettings::default();
    assert_eq!(d.draws_per_chain(), 1000);
    let kept: Vec<usize> = (0..d.iterations).filter(|&i| d.retains(i)).collect();
    assert_eq!(kept.len(), 1000);
    assert_eq!(kept[0], 10_009);
    assert_eq!(*kept.last().unwrap(), 19_999);

    assert!(SamplerSettings { burn_in: 10, iterations: 10, ..s.clone() }.validate().is_err());
    assert!(SamplerSettings { thin: 0, ..s.clone() }.validate().is_err());
    assert!(SamplerSettings { chains: 0, ..s.clone() }.validate().is_err());
    assert!(SamplerSettings { thin: 5, iterations: 12, burn_in: 9, ..s }.validate().is_err());
}

#[test]
fn runs_are_reproducible_and_seed_sensitive() {
    let input = small_input(20, |_| true);
    let s = SamplerSettings {
        chains: 3,
        iterations: 200,
        burn_in: 100,
        thin: 5,
        ..SamplerSettings::default()
    };
    let a = run_chains(&input, &config(&["x"]), &s).unwrap();
    let b = run_chains(&input, &config(&["x"]), &s).unwrap();
    assert_eq!(a, b);
    let c = run_chains(&input, &config(&["x"]), &SamplerSettings { seed: 1, ..s }).unwrap();
    assert_ne!(a, c);
    assert_eq!(a.len(), 60);
    assert!(a.draws.iter().all(|d| d.state.is_finite()));
}

#[test]
fn draws_are_centred() {
    let input = small_input(15, |_| true);
    let s = SamplerSettings {
        chains: 1,
        iterations: 50,
        burn_in: 10,
        thin: 1,
        ..SamplerSettings::default()
    };
    for mode in [LatentUpdate::Block, LatentUpdate::SingleSite] {
        let d = run_chains(&input, &config(&["x"]), &SamplerSettings { latent_update: mode, ..s.clone() })
            .unwrap();
        for draw in &d.draws {
            assert!(mean(&draw.state.u).abs() < 1e-10);
        }
    }
}

#[test]
fn coefficient_conditional_tends_to_least_squares() {
    let input = small_input(12, |_| true);
    let model = GibbsModel::new(&input, &config(&["x"])).unwrap();
    let st = state(&model, 1e9, 1.0);
    let (m, _) = model.coefficient_conditional(&st).unwrap();
    // Independent normal-equations solve.
    let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
    let y: Vec<f64> = (0..12).map(|i| 1.0 + 0.5 * x[i] + 0.05 * i as f64).collect();
    let z = DMatrix::from_fn(12, 2, |r, c| if c == 0 { 1.0 } else { x[r] });
    let ols = (z.transpose() * &z)
        .try_inverse()
        .unwrap()
        * z.transpose()
        * DVector::from_vec(y);
    assert!((m[0] - ols[0]).abs() < 1e-6);
    assert!((m[1] - ols[1]).abs() < 1e-6);
}

#[test]
fn coefficient_draws_match_conditional_moments() {
    let input = small_input(10, |_| true);
    let model = GibbsModel::new(&input, &config(&["x"])).unwrap();
    let st = state(&model, 4.0, 1.0);
    let (m, prec) = model.coefficient_conditional(&st).unwrap();
    let cov = prec.try_inverse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 40_000;
    let mut b0 = Vec::with_capacity(n);
    let mut b1 = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = st.clone();
        model.update_coefficients(&mut s, &mut rng).unwrap();
        b0.push(s.coefficients[0]);
        b1.push(s.coefficients[1]);
    }
    for (draws, j) in [(&b0, 0), (&b1, 1)] {
        let se = (cov[(j, j)] / n as f64).sqrt();
        assert!((mean(draws) - m[j]).abs() < 4.0 * se);
        assert!((variance(draws) / cov[(j, j)] - 1.0).abs() < 0.05);
    }
    let c01 = b0
        .iter()
        .zip(&b1)
        .map(|(a, b)| (a - mean(&b0)) * (b - mean(&b1)))
        .sum::<f64>()
        / (n - 1) as f64;
    assert!((c01 - cov[(0, 1)]).abs() < 0.05 * (cov[(0, 0)] * cov[(1, 1)]).sqrt());
}

#[test]
fn site_conditional_limits() {
    let input = small_input(9, |i| i != 4);
    let model = GibbsModel::new(&input, &config(&["x"])).unwrap();
    let mut st = state(&model, 1e12, 1.0);
    st.coefficients = vec![0.3, -0.2];
    st.u = vec![0.1, -0.3, 0.2, 0.0, 0.5, 0.4, -0.1, 0.2, 0.3];
    // Observed month with a huge observation precision: pinned to the residual target.
    let (m, v) = model.latent_site_conditional(&st, 2);
    let x2 = (2.0f64 * 0.7).sin();
    let y2 = 1.0 + 0.5 * x2 + 0.1;
    assert!((m - (y2 - 0.3 + 0.2 * x2)).abs() < 1e-9);
    assert!(v < 1e-11);
    // Unobserved month: pure RW2 conditional.
    let (m, v) = model.latent_site_conditional(&st, 4);
    let (pm, pv) = crate::rw2::rw2_conditional(&st.u, 4, 1.0).unwrap();
    assert_eq!((m, v), (pm, pv));
}

#[test]
fn precision_conditional_parameters() {
    let input = small_input(6, |i| i < 4);
    let model = GibbsModel::new(&input, &config(&["x"])).unwrap();
    let mut st = state(&model, 1.0, 1.0);
    st.u = vec![0.0, 1.0, 0.0, 0.0, 2.0, 0.0];
    let ((a, b), (ae, be)) = model.precision_conditionals(&st);
    let ssr: f64 = model.residuals(&st).iter().map(|r| r * r).sum();
    assert_eq!(a, 1.0 + 2.0);
    assert!((b - (0.01 + ssr / 2.0)).abs() < 1e-12);
    assert_eq!(ae, 1.0 + 2.0);
    // second differences: -2, 1, 2, -4
    assert!((be - (0.01 + 25.0 / 2.0)).abs() < 1e-12);
}

#[test]
fn gamma_draws_use_rate_parameterisation() {
    // Gamma(shape 3, rate 1.01): mean 3/1.01, variance 3/1.01².
    let input = small_input(6, |_| false);
    let model = GibbsModel::new(&input, &config(&["x"])).unwrap();
    let mut st = state(&model, 1.0, 1.0);
    // second differences 1, -1, 0, 0
    st.u = vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
    let ((_, _), (ae, be)) = model.precision_conditionals(&st);
    assert_eq!(ae, 3.0);
    assert!((be - 1.01).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            let mut s = st.clone();
            model.update_precisions(&mut s, &mut rng);
            s.tau_e
        })
        .collect();
    let (m, v) = (3.0 / 1.01, 3.0 / (1.01 * 1.01));
    assert!((mean(&draws) - m).abs() < 4.0 * (v / n as f64).sqrt());
    assert!((variance(&draws) / v - 1.0).abs() < 0.03);
}

#[test]
fn recentering_preserves_fitted_values() {
    let input = small_input(8, |_| true);
    let model = GibbsModel::new(&input, &config(&["x"])).unwrap();
    let mut st = state(&model, 2.0, 3.0);
    st.coefficients = vec![0.4, 1.5];
    st.u = (0..8).map(|i| 0.3 * i as f64 + 1.0).collect();
    let before = model.residuals(&st);
    let ss2 = crate::rw2::second_difference_ss(&st.u);
    model.recenter(&mut st);
    let after = model.residuals(&st);
    for (a, b) in before.iter().zip(&after) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(mean(&st.u).abs() < 1e-12);
    assert!((crate::rw2::second_difference_ss(&st.u) - ss2).abs() < 1e-12);
}

#[test]
fn block_draw_matches_dense_conditional() {
    let n = 9;
    let input = small_input(n, |i| i % 3 != 1);
    let model = GibbsModel::new(&input, &config(&["x"])).unwrap();
    let mut st = state(&model, 5.0, 2.0);
    st.coefficients = vec![0.2, 0.4];

    let k = crate::rw2::rw2_structure(n).unwrap();
    let mut q = DMatrix::from_fn(n, n, |i, j| st.tau_e * k.get(i, j));
    let mut b = DVector::zeros(n);
    for t in 0..n {
        if let Some(r) = model.latent_target(t, &st.coefficients) {
            q[(t, t)] += st.tau;
            b[t] = st.tau * r;
        }
    }
    let cov = q.clone().try_inverse().unwrap();
    let mu = &cov * b;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 40_000;
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for _ in 0..draws {
        let mut s = st.clone();
        assert!(model.sweep_block(&mut s, &mut rng));
        for t in 0..n {
            sum[t] += s.u[t];
            sq[t] += s.u[t] * s.u[t];
        }
    }
    for t in 0..n {
        let m = sum[t] / draws as f64;
        let v = sq[t] / draws as f64 - m * m;
        assert!((m - mu[t]).abs() < 4.5 * (cov[(t, t)] / draws as f64).sqrt(), "mean at {t}");
        assert!((v / cov[(t, t)] - 1.0).abs() < 0.05, "var at {t}");
    }
}

#[test]
fn block_falls_back_without_data() {
    let input = small_input(7, |i| i == 3);
    let model = GibbsModel::new(&input, &config(&["x"])).unwrap();
    let mut st = state(&model, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(!model.sweep_block(&mut st, &mut rng));
    assert!(st.u.iter().all(|&v| v == 0.0));
    model.update_latent(&mut st, LatentUpdate::Block, &mut rng);
    assert!(st.u.iter().any(|&v| v != 0.0));
    assert!(st.is_finite());
}

#[test]
fn empty_likelihood_samples_the_prior() {
    // No likelihood rows: the covariate coefficient is N(0, 1000) and tau is
    // Gamma(1, 0.01).
    let input = small_input(8, |_| false);
    let cfg = config(&["x"]);
    let s = SamplerSettings {
        chains: 1,
        iterations: 20_000,
        burn_in: 1,
        thin: 1,
        ..SamplerSettings::default()
    };
    let d = run_chains(&input, &cfg, &s).unwrap();
    let beta: Vec<f64> = d.coefficient_draws(1);
    let tau: Vec<f64> = d.draws.iter().map(|x| x.state.tau).collect();
    let n = beta.len() as f64;
    assert!(mean(&beta).abs() < 4.0 * (1000.0 / n).sqrt());
    assert!((variance(&beta) / 1000.0 - 1.0).abs() < 0.05);
    assert!((mean(&tau) / 100.0 - 1.0).abs() < 0.05);
}

#[test]
fn lag_column_enters_design() {
    let n = 30;
    let y: Vec<Option<f64>> = (0..n).map(|i| Some(i as f64 * 0.1)).collect();
    let lag = LagColumn {
        months: 12,
        values: (0..n).map(|i| (i >= 12).then(|| (i - 12) as f64 * 0.1)).collect(),
    };
    let mask = (0..n).map(|i| i >= 12).collect();
    let input = PreparedModelInput::from_parts(start(), y, vec![], Some(lag), mask).unwrap();
    let cfg = ModelConfig {
        use_lag12: true,
        ..config(&[])
    };
    let model = GibbsModel::new(&input, &cfg).unwrap();
    assert_eq!(model.n_coefficients(), 2);
    assert_eq!(model.n_observations(), 18);
    assert_eq!(input.coefficient_names(), ["beta0", "gamma"]);
}

#[test]
fn non_finite_state_is_detected() {
    let mut s = ModelState {
        coefficients: vec![0.0],
        u: vec![0.0; 5],
        tau: 1.0,
        tau_e: 1.0,
    };
    assert!(s.is_finite());
    s.u[2] = f64::NAN;
    assert!(!s.is_finite());
    s.u[2] = 0.0;
    s.tau = 0.0;
    assert!(!s.is_finite());
}

#[test]
fn anchored_draw_matches_dense_conditional() {
    // One observed month: the full conditional is improper, but the field
    // beyond the first two sites is proper given them.
    let n = 8;
    let input = small_input(n, |i| i == 5);
    let model = GibbsModel::new(&input, &config(&["x"])).unwrap();
    let mut st = state(&model, 3.0, 2.0);
    st.coefficients = vec![0.1, -0.3];
    st.u[0] = 0.4;
    st.u[1] = -0.2;

    let k = crate::rw2::rw2_structure(n).unwrap();
    let mut q = DMatrix::from_fn(n, n, |i, j| st.tau_e * k.get(i, j));
    let mut b = DVector::zeros(n);
    let r = model.latent_target(5, &st.coefficients).unwrap();
    q[(5, 5)] += st.tau;
    b[5] = st.tau * r;
    let m = n - 2;
    let qtt = q.view((2, 2), (m, m)).into_owned();
    let qta = q.view((2, 0), (m, 2)).into_owned();
    let fixed = DVector::from_vec(vec![st.u[0], st.u[1]]);
    let cov = qtt.try_inverse().unwrap();
    let mu = &cov * (b.rows(2, m) - qta * fixed);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let draws = 40_000;
    let mut sum = vec![0.0; m];
    let mut sq = vec![0.0; m];
    for _ in 0..draws {
        let mut s = st.clone();
        model.sweep_anchored(&mut s, &mut rng);
        for i in 0..m {
            sum[i] += s.u[i + 2];
            sq[i] += s.u[i + 2] * s.u[i + 2];
        }
    }
    for i in 0..m {
        let mean = sum[i] / draws as f64;
        let var = sq[i] / draws as f64 - mean * mean;
        assert!((mean - mu[i]).abs() < 4.5 * (cov[(i, i)] / draws as f64).sqrt(), "mean at {i}");
        assert!((var / cov[(i, i)] - 1.0).abs() < 0.05, "var at {i}");
    }
}
