//! Intrinsic second-order random walk.
//!
//! The prior penalizes second differences `u[t] - 2 u[t-1] + u[t-2]` with
//! innovation variance `v_e`. It is improper: constants and linear ramps
//! carry zero penalty. Everything here works with the penalty `DᵀD`
//! (`D` the `(T-2) x T` second-difference operator) or with the single-site
//! full conditionals it implies; no covariance matrix is ever formed.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub const MIN_FIELD_LEN: usize = 5;

/// Diagonal of `DᵀD` at index `t` for a field of length `n` (n >= 5).
pub fn penalty_diagonal(t: usize, n: usize) -> f64 {
    match t {
        0 => 1.0,
        1 => 5.0,
        _ if t == n - 1 => 1.0,
        _ if t == n - 2 => 5.0,
        _ => 6.0,
    }
}

/// Mean and variance of `u[t]` given every other component, for innovation
/// variance `v_e`. `t` is 0-based.
pub fn rw2_conditional(u: &[f64], t: usize, v_e: f64) -> Result<(f64, f64)> {
    let n = u.len();
    if n < MIN_FIELD_LEN {
        return Err(Error::FieldTooShort(n));
    }
    if t >= n {
        return Err(Error::IndexOutOfRange { index: t, len: n });
    }
    let mean = match t {
        0 => 2.0 * u[1] - u[2],
        1 => (2.0 * u[0] + 4.0 * u[2] - u[3]) / 5.0,
        _ if t == n - 1 => 2.0 * u[n - 2] - u[n - 3],
        _ if t == n - 2 => (2.0 * u[n - 1] + 4.0 * u[n - 3] - u[n - 4]) / 5.0,
        _ => (4.0 * (u[t - 1] + u[t + 1]) - (u[t - 2] + u[t + 2])) / 6.0,
    };
    Ok((mean, v_e / penalty_diagonal(t, n)))
}

/// Dense `DᵀD` penalty of an RW2 field of length `len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rw2Structure {
    len: usize,
    penalty: Vec<f64>,
}

impl Rw2Structure {
    pub fn new(len: usize) -> Result<Self> {
        if len < MIN_FIELD_LEN {
            return Err(Error::FieldTooShort(len));
        }
        let mut penalty = vec![0.0; len * len];
        const STENCIL: [f64; 3] = [1.0, -2.0, 1.0];
        for r in 0..len - 2 {
            for (a, wa) in STENCIL.iter().enumerate() {
                for (b, wb) in STENCIL.iter().enumerate() {
                    penalty[(r + a) * len + r + b] += wa * wb;
                }
            }
        }
        Ok(Self { len, penalty })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.penalty[i * self.len + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.penalty[i * self.len..(i + 1) * self.len]
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len)
            .map(|i| self.row(i).iter().zip(u).map(|(p, x)| p * x).sum())
            .collect()
    }

    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        self.apply(u).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    /// Conditional of component `t` under a Gaussian with precision
    /// `penalty / v_e`.
    pub fn conditional(&self, u: &[f64], t: usize, v_e: f64) -> (f64, f64) {
        let diag = self.get(t, t);
        let off: f64 = (0..self.len)
            .filter(|&s| s != t)
            .map(|s| self.get(t, s) * u[s])
            .sum();
        (-off / diag, v_e / diag)
    }
}

pub fn rw2_structure(len: usize) -> Result<Rw2Structure> {
    Rw2Structure::new(len)
}

/// Sum of squared second differences.
pub fn second_difference_ss(u: &[f64]) -> f64 {
    u.windows(3)
        .map(|w| {
            let d = w[2] - 2.0 * w[1] + w[0];
            d * d
        })
        .sum()
}

/// Log-kernel of the intrinsic RW2 prior (no normalizing constant).
pub fn rw2_logpenalty(u: &[f64], v_e: f64) -> f64 {
    -second_difference_ss(u) / (2.0 * v_e)
}

/// Extend a field forward by `horizon` steps from its last two values.
pub fn rw2_forward_simulate<R: Rng + ?Sized>(
    last_two: (f64, f64),
    horizon: usize,
    v_e: f64,
    rng: &mut R,
) -> Vec<f64> {
    let sd = v_e.sqrt();
    let (mut prev, mut cur) = last_two;
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let z: f64 = StandardNormal.sample(rng);
        let next = 2.0 * cur - prev + sd * z;
        out.push(next);
        prev = cur;
        cur = next;
    }
    out
}
