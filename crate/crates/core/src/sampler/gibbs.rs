//! Conjugate full-conditional updates.
//!
//! Model, on the model scale, for field months `t` with a likelihood term:
//!
//! ```text
//! y[t] ~ Normal(z[t]·coef + u[t], 1/tau)      z[t] = [1, x[t], y[t-12]]
//! coef ~ Normal(0, prior_coef_variance · I)
//! u    ~ intrinsic RW2 with precision tau_e · DᵀD
//! tau, tau_e ~ Gamma(shape, rate)
//! ```

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::banded::PentaCholesky;
use super::{LatentUpdate, ModelConfig, ModelState};
use crate::data::PreparedModelInput;
use crate::error::{Error, Result};
use crate::rw2::{self, penalty_diagonal, second_difference_ss};

/// Precomputed likelihood view of a prepared input.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    field_len: usize,
    n_coef: usize,
    rows: Vec<usize>,
    design: DMatrix<f64>,
    y: DVector<f64>,
    gram: DMatrix<f64>,
    row_of_field: Vec<Option<usize>>,
    coef_prior_precision: f64,
    shape: f64,
    rate: f64,
}

fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("gamma parameters are positive")
        .sample(rng)
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

impl GibbsModel {
    pub fn new(input: &PreparedModelInput, config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let field_len = input.field_len();
        if field_len < rw2::MIN_FIELD_LEN {
            return Err(Error::FieldTooShort(field_len));
        }
        let rows = input.likelihood_rows();
        let n_coef = input.n_coefficients();
        let mut design = DMatrix::zeros(rows.len(), n_coef);
        let mut y = DVector::zeros(rows.len());
        let mut row_of_field = vec![None; field_len];
        for (r, &t) in rows.iter().enumerate() {
            let z = input
                .design_row(t)
                .ok_or_else(|| Error::InvalidConfig(format!("incomplete design row at {t}")))?;
            for (j, v) in z.into_iter().enumerate() {
                design[(r, j)] = v;
            }
            y[r] = input.y()[t].expect("validated by PreparedModelInput");
            row_of_field[t] = Some(r);
        }
        let gram = design.transpose() * &design;
        Ok(Self {
            field_len,
            n_coef,
            rows,
            design,
            y,
            gram,
            row_of_field,
            coef_prior_precision: 1.0 / config.prior_coef_variance,
            shape: config.prior_gamma_shape,
            rate: config.prior_gamma_rate,
        })
    }

    pub fn field_len(&self) -> usize {
        self.field_len
    }

    pub fn n_coefficients(&self) -> usize {
        self.n_coef
    }

    pub fn n_observations(&self) -> usize {
        self.rows.len()
    }

    /// Linear predictor without the latent term for likelihood row `r`.
    fn regression(&self, r: usize, coef: &[f64]) -> f64 {
        (0..self.n_coef).map(|j| self.design[(r, j)] * coef[j]).sum()
    }

    /// Observation residuals `y - z·coef - u` over the likelihood rows.
    pub fn residuals(&self, state: &ModelState) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, &t)| self.y[r] - self.regression(r, &state.coefficients) - state.u[t])
            .collect()
    }

    /// Precision matrix and canonical mean (`precision · mean`) of the
    /// coefficient full conditional.
    fn coefficient_system(&self, state: &ModelState) -> (DMatrix<f64>, DVector<f64>) {
        let mut precision = &self.gram * state.tau;
        for j in 0..self.n_coef {
            precision[(j, j)] += self.coef_prior_precision;
        }
        let target = DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().enumerate().map(|(r, &t)| self.y[r] - state.u[t]),
        );
        let rhs = self.design.transpose() * target * state.tau;
        (precision, rhs)
    }

    /// Mean and precision matrix of the coefficient full conditional.
    pub fn coefficient_conditional(&self, state: &ModelState) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let (precision, rhs) = self.coefficient_system(state);
        let chol = precision.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        Ok((chol.solve(&rhs), precision))
    }

    /// Joint draw of (beta0, beta, gamma) given u and tau.
    pub fn update_coefficients<R: Rng + ?Sized>(
        &self,
        state: &mut ModelState,
        rng: &mut R,
    ) -> Result<()> {
        let (precision, rhs) = self.coefficient_system(state);
        let chol = precision.cholesky().ok_or(Error::NotPositiveDefinite)?;
        // mean + L⁻ᵀ z = L⁻ᵀ (L⁻¹ rhs + z)
        let l = chol.l();
        let mut w = l
            .solve_lower_triangular(&rhs)
            .ok_or(Error::NotPositiveDefinite)?;
        for v in w.iter_mut() {
            *v += std_normal(rng);
        }
        let draw = l
            .transpose()
            .solve_upper_triangular(&w)
            .ok_or(Error::NotPositiveDefinite)?;
        state.coefficients.copy_from_slice(draw.as_slice());
        Ok(())
    }

    /// Latent residual target `y[t] - z[t]·coef` if month `t` is observed.
    pub(super) fn latent_target(&self, t: usize, coef: &[f64]) -> Option<f64> {
        self.row_of_field[t].map(|r| self.y[r] - self.regression(r, coef))
    }

    /// Single-site update of `u[t]` combining the RW2 conditional with the
    /// observation at `t` (if any).
    pub fn latent_site_conditional(&self, state: &ModelState, t: usize) -> (f64, f64) {
        let (prior_mean, _) = rw2::rw2_conditional(&state.u, t, 1.0 / state.tau_e)
            .expect("field length checked at construction");
        let prior_precision = state.tau_e * penalty_diagonal(t, self.field_len);
        match self.latent_target(t, &state.coefficients) {
            Some(r) => {
                let p = prior_precision + state.tau;
                ((prior_precision * prior_mean + state.tau * r) / p, 1.0 / p)
            }
            None => (prior_mean, 1.0 / prior_precision),
        }
    }

    fn sweep_single_site<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let mut order: Vec<usize> = (0..self.field_len).collect();
        order.shuffle(rng);
        for t in order {
            let (mean, var) = self.latent_site_conditional(state, t);
            state.u[t] = mean + var.sqrt() * std_normal(rng);
        }
    }

    /// Bands of the latent full-conditional precision and its canonical mean.
    fn latent_system(&self, state: &ModelState) -> [Vec<f64>; 4] {
        let n = self.field_len;
        let mut diag = vec![0.0; n];
        let mut sub1 = vec![0.0; n];
        let sub2 = vec![state.tau_e; n];
        let mut b = vec![0.0; n];
        for t in 0..n {
            diag[t] = state.tau_e * penalty_diagonal(t, n);
            sub1[t] = state.tau_e * if t == 1 || t == n - 1 { -2.0 } else { -4.0 };
            if let Some(r) = self.latent_target(t, &state.coefficients) {
                diag[t] += state.tau;
                b[t] = state.tau * r;
            }
        }
        [diag, sub1, sub2, b]
    }

    /// Joint draw of the whole field from its Gaussian full conditional.
    /// Returns false when the conditional precision is singular (fewer than
    /// two observed months), leaving `state` untouched.
    pub(super) fn sweep_block<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) -> bool {
        let [diag, sub1, sub2, mut b] = self.latent_system(state);
        let Some(chol) = PentaCholesky::factor(&diag, &sub1, &sub2) else {
            return false;
        };
        chol.solve_lower(&mut b);
        for v in b.iter_mut() {
            *v += std_normal(rng);
        }
        chol.solve_upper(&mut b);
        state.u = b;
        true
    }

    /// Joint draw of `u[2..]` given `u[0]` and `u[1]`, then single-site
    /// draws of those two. Fixing two sites removes the RW2 null space, so
    /// this works with any number of observed months.
    pub(super) fn sweep_anchored<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let [diag, sub1, sub2, mut b] = self.latent_system(state);
        let (u0, u1) = (state.u[0], state.u[1]);
        b[2] -= sub2[2] * u0 + sub1[2] * u1;
        b[3] -= sub2[3] * u1;
        let chol = PentaCholesky::factor(&diag[2..], &sub1[2..], &sub2[2..])
            .expect("RW2 precision without its first two sites is positive definite");
        let tail = &mut b[2..];
        chol.solve_lower(tail);
        for v in tail.iter_mut() {
            *v += std_normal(rng);
        }
        chol.solve_upper(tail);
        state.u[2..].copy_from_slice(tail);
        for t in [0, 1] {
            let (mean, var) = self.latent_site_conditional(state, t);
            state.u[t] = mean + var.sqrt() * std_normal(rng);
        }
    }

    /// Exact draw along the direction that moves the intercept against a
    /// constant shift of the field. Likelihood and RW2 penalty are flat along
    /// it, so the intercept is redrawn from its prior and the field absorbs
    /// the difference. Run before the coefficient update; together with
    /// [`Self::recenter`] this makes the recorded (centred) states follow the
    /// exact projection of the unconstrained posterior.
    pub fn refresh_intercept<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let sd = (1.0 / self.coef_prior_precision).sqrt();
        let fresh = sd * std_normal(rng);
        let shift = state.coefficients[0] - fresh;
        for v in state.u.iter_mut() {
            *v += shift;
        }
        state.coefficients[0] = fresh;
    }

    /// One full sweep: intercept refresh, coefficients, latent field
    /// (recentred), then both precisions.
    pub fn sweep<R: Rng + ?Sized>(
        &self,
        state: &mut ModelState,
        mode: LatentUpdate,
        rng: &mut R,
    ) -> Result<()> {
        self.refresh_intercept(state, rng);
        self.update_coefficients(state, rng)?;
        self.update_latent(state, mode, rng);
        self.update_precisions(state, rng);
        Ok(())
    }

    /// Shift the field to zero mean, moving the shift into the intercept.
    pub fn recenter(&self, state: &mut ModelState) {
        let shift = state.u.iter().sum::<f64>() / self.field_len as f64;
        for v in state.u.iter_mut() {
            *v -= shift;
        }
        state.coefficients[0] += shift;
    }

    /// Update the latent field, then recenter it.
    pub fn update_latent<R: Rng + ?Sized>(
        &self,
        state: &mut ModelState,
        mode: LatentUpdate,
        rng: &mut R,
    ) {
        match mode {
            LatentUpdate::SingleSite => self.sweep_single_site(state, rng),
            LatentUpdate::Block => {
                if !self.sweep_block(state, rng) {
                    self.sweep_anchored(state, rng);
                }
            }
        }
        self.recenter(state);
    }

    /// Shape and rate of the observation-precision and RW2-precision
    /// full conditionals.
    pub fn precision_conditionals(&self, state: &ModelState) -> ((f64, f64), (f64, f64)) {
        let ssr: f64 = self.residuals(state).iter().map(|r| r * r).sum();
        let tau = (
            self.shape + self.rows.len() as f64 / 2.0,
            self.rate + ssr / 2.0,
        );
        let tau_e = (
            self.shape + (self.field_len - 2) as f64 / 2.0,
            self.rate + second_difference_ss(&state.u) / 2.0,
        );
        (tau, tau_e)
    }

    pub fn update_precisions<R: Rng + ?Sized>(&self, state: &mut ModelState, rng: &mut R) {
        let ((a, b), (ae, be)) = self.precision_conditionals(state);
        state.tau = gamma_draw(rng, a, b);
        state.tau_e = gamma_draw(rng, ae, be);
    }

    /// Starting state: ridge least squares for the coefficients, a flat
    /// field, and precisions matched to the least-squares residuals.
    /// `jitter` scales a random perturbation of the coefficients.
    pub fn initial_state<R: Rng + ?Sized>(&self, jitter: f64, rng: &mut R) -> ModelState {
        let mut state = ModelState {
            coefficients: vec![0.0; self.n_coef],
            u: vec![0.0; self.field_len],
            tau: 1.0,
            tau_e: 1.0,
        };
        let n = self.rows.len();
        if n == 0 {
            return state;
        }
        let mut a = self.gram.clone();
        for j in 0..self.n_coef {
            a[(j, j)] += 1e-8 * (1.0 + self.gram[(j, j)]);
        }
        let rhs = self.design.transpose() * &self.y;
        if let Some(chol) = a.cholesky() {
            state.coefficients.copy_from_slice(chol.solve(&rhs).as_slice());
        }
        let y_mean = self.y.mean();
        let y_sd = if n > 1 {
            (self.y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            1.0
        };
        let scale = if y_sd > 0.0 { y_sd } else { 1.0 };
        for c in state.coefficients.iter_mut() {
            *c += jitter * scale * 0.1 * std_normal(rng);
        }
        let resid = self.residuals(&state);
        let mse = resid.iter().map(|r| r * r).sum::<f64>() / n as f64;
        let var = if mse > 0.0 { mse } else { scale * scale };
        state.tau = 1.0 / var;
        state.tau_e = 10.0 / var;
        state
    }
}
