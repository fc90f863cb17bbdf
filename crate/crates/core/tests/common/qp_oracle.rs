//! Brute-force solver for small C-SVC duals, used as a test oracle.
//!
//! The dual is convex, so its minimum is a stationary point of the problem
//! restricted to some face of the box. Every assignment of each multiplier
//! to {0, C, free} is tried; the free block is solved from its KKT system
//! and kept if feasible.

use nalgebra::{DMatrix, DVector};

pub struct QpResult {
    pub alpha: Vec<f64>,
    pub objective: f64,
}

pub fn objective(q: &DMatrix<f64>, alpha: &[f64]) -> f64 {
    let a = DVector::from_column_slice(alpha);
    0.5 * (a.transpose() * q * &a)[(0, 0)] - a.sum()
}

/// `kernel` is row-major n x n.
pub fn solve(kernel: &[f64], y: &[f64], c: f64) -> QpResult {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * kernel[i * n + j]);
    let mut best: Option<QpResult> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let bound_balance: f64 = (0..n).filter(|&i| state[i] != 2).map(|i| y[i] * alpha[i]).sum();
        if free.is_empty() {
            if bound_balance.abs() > 1e-12 {
                continue;
            }
        } else {
            // [Q_FF y_F; y_F^T 0] [a_F; nu] = [1 - Q_FB a_B; -y_B^T a_B]
            let m = free.len();
            let mut lhs = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    lhs[(r, s)] = q[(i, j)];
                }
                lhs[(r, m)] = y[i];
                lhs[(m, r)] = y[i];
                rhs[r] = 1.0 - (0..n).filter(|&j| state[j] != 2).map(|j| q[(i, j)] * alpha[j]).sum::<f64>();
            }
            rhs[m] = -bound_balance;
            let Some(sol) = lhs.lu().solve(&rhs) else {
                continue;
            };
            if free.iter().enumerate().any(|(r, _)| !(sol[r] > -1e-12 && sol[r] < c + 1e-12)) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
        }
        let obj = objective(&q, &alpha);
        if best.as_ref().is_none_or(|b| obj < b.objective) {
            best = Some(QpResult { alpha, objective: obj });
        }
    }
    best.expect("alpha = 0 is always feasible")
}

/// Maximal KKT violation `max_{I_up} -y G - min_{I_low} -y G` at `alpha`.
pub fn kkt_violation(kernel: &[f64], y: &[f64], c: f64, alpha: &[f64]) -> f64 {
    let n = y.len();
    let grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * kernel[i * n + j] * alpha[j]).sum::<f64>() - 1.0)
        .collect();
    let eps = 1e-12;
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for i in 0..n {
        let v = -y[i] * grad[i];
        let in_up = (y[i] > 0.0 && alpha[i] < c - eps) || (y[i] < 0.0 && alpha[i] > eps);
        let in_low = (y[i] > 0.0 && alpha[i] > eps) || (y[i] < 0.0 && alpha[i] < c - eps);
        if in_up {
            up = up.max(v);
        }
        if in_low {
            low = low.min(v);
        }
    }
    if up == f64::NEG_INFINITY || low == f64::INFINITY {
        0.0
    } else {
        (up - low).max(0.0)
    }
}

pub fn rbf_matrix(xs: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = xs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d2: f64 = xs[i].iter().zip(&xs[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            k[i * n + j] = (-gamma * d2).exp();
        }
    }
    k
}
