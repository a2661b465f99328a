//! Cholesky factorization of symmetric pentadiagonal matrices.

/// Lower-triangular factor `L` of a symmetric matrix with bandwidth 2,
/// stored by diagonal.
#[derive(Debug, Clone)]
pub(crate) struct PentaCholesky {
    diag: Vec<f64>,
    sub1: Vec<f64>,
    sub2: Vec<f64>,
}

impl PentaCholesky {
    /// `diag[t] = Q[t,t]`, `sub1[t] = Q[t,t-1]`, `sub2[t] = Q[t,t-2]`
    /// (leading entries of `sub1`/`sub2` are ignored). Returns `None` when the
    /// matrix is not numerically positive definite.
    pub fn factor(diag: &[f64], sub1: &[f64], sub2: &[f64]) -> Option<Self> {
        let n = diag.len();
        let mut l0 = vec![0.0; n];
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        for t in 0..n {
            if t >= 2 {
                l2[t] = sub2[t] / l0[t - 2];
            }
            if t >= 1 {
                let corr = if t >= 2 { l2[t] * l1[t - 1] } else { 0.0 };
                l1[t] = (sub1[t] - corr) / l0[t - 1];
            }
            let pivot = diag[t] - l1[t] * l1[t] - l2[t] * l2[t];
            if !(pivot > 1e-12 * diag[t].abs()) {
                return None;
            }
            l0[t] = pivot.sqrt();
        }
        Some(Self {
            diag: l0,
            sub1: l1,
            sub2: l2,
        })
    }

    /// Solve `L w = b` in place.
    pub fn solve_lower(&self, b: &mut [f64]) {
        for t in 0..b.len() {
            let mut v = b[t];
            if t >= 1 {
                v -= self.sub1[t] * b[t - 1];
            }
            if t >= 2 {
                v -= self.sub2[t] * b[t - 2];
            }
            b[t] = v / self.diag[t];
        }
    }

    /// Solve `Lᵀ x = w` in place.
    pub fn solve_upper(&self, w: &mut [f64]) {
        let n = w.len();
        for t in (0..n).rev() {
            let mut v = w[t];
            if t + 1 < n {
                v -= self.sub1[t + 1] * w[t + 1];
            }
            if t + 2 < n {
                v -= self.sub2[t + 2] * w[t + 2];
            }
            w[t] = v / self.diag[t];
        }
    }
}
