//! Sequential minimal optimization for the C-SVC dual
//!
//! ```text
//! min_a  1/2 a^T Q a - e^T a   s.t.  y^T a = 0,  0 <= a_i <= C
//! Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Working pairs are chosen by maximal violation for the first index and
//! second-order gain for the second (Fan, Chen and Lin, 2005), the same rule
//! libsvm uses. No shrinking; the kernel matrix is held in memory.

/// Stopping tolerance on the maximal KKT violation `m(a) - M(a)`.
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `sum_i alpha_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    /// Dual objective `1/2 a^T Q a - e^T a` at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the binary dual for labels `y` (each `+1.0` or `-1.0`) over the
/// row-major `n x n` kernel matrix.
pub fn solve_binary(kernel: &[f64], y: &[f64], c: f64, tolerance: f64) -> SmoSolution {
    let n = y.len();
    debug_assert_eq!(kernel.len(), n * n);
    let k = |i: usize, j: usize| kernel[i * n + j];

    let mut alpha = vec![0.0; n];
    // gradient of the objective: Q a - e
    let mut grad = vec![-1.0; n];
    let max_iterations = (100 * n).max(10_000_000);
    let mut iterations = 0;
    let mut converged = false;

    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    while iterations < max_iterations {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        // j: second-order choice in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                if in_low(alpha[t], y[t]) {
                    let v = y[t] * grad[t];
                    gmax2 = gmax2.max(v);
                    let b = gmax + v;
                    if b > 0.0 {
                        let mut a = k(i, i) + k(t, t) - 2.0 * k(i, t);
                        if a <= 0.0 {
                            a = TAU;
                        }
                        let gain = -(b * b) / a;
                        if gain < obj_min {
                            obj_min = gain;
                            j_sel = Some(t);
                        }
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        if gmax + gmax2 < tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * k(i, j);
        if y[i] != y[j] {
            let mut quad = k(i, i) + k(j, j) + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k(i, i) + k(j, j) - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
    }

    let rho = compute_rho(&alpha, &grad, y, c);
    let objective = alpha
        .iter()
        .zip(&grad)
        .map(|(a, g)| a * (g - 1.0))
        .sum::<f64>()
        / 2.0;
    SmoSolution {
        alpha,
        rho,
        objective,
        iterations,
        converged,
    }
}

/// Average of `y_i G_i` over free multipliers, or the midpoint of the
/// feasible interval when every multiplier sits at a bound.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for ((&a, &g), &yi) in alpha.iter().zip(grad).zip(y) {
        let yg = yi * g;
        if a >= c {
            if yi < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if a <= 0.0 {
            if yi > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        (upper + lower) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_kernel(xs: &[[f64; 2]]) -> Vec<f64> {
        let n = xs.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = xs[i][0] * xs[j][0] + xs[i][1] * xs[j][1];
            }
        }
        k
    }

    #[test]
    fn two_points_linear_closed_form() {
        // x = (+1, 0) with y = +1 and (-1, 0) with y = -1: the max-margin
        // solution has w = (1, 0), so alpha = 1/2 each and rho = 0.
        let k = linear_kernel(&[[1.0, 0.0], [-1.0, 0.0]]);
        let sol = solve_binary(&k, &[1.0, -1.0], 10.0, 1e-6);
        assert!(sol.converged);
        assert!((sol.alpha[0] - 0.5).abs() < 1e-9);
        assert!((sol.alpha[1] - 0.5).abs() < 1e-9);
        assert!(sol.rho.abs() < 1e-9);
        assert!((sol.objective + 0.5).abs() < 1e-9);
    }

    #[test]
    fn respects_box_and_equality_constraints() {
        let xs = [[0.0, 0.0], [1.0, 1.0], [0.2, 0.9], [1.1, 0.1], [0.5, 0.5]];
        let y = [1.0, 1.0, -1.0, -1.0, 1.0];
        let k = linear_kernel(&xs);
        let c = 0.7;
        let sol = solve_binary(&k, &y, c, 1e-3);
        assert!(sol.converged);
        assert!(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(balance.abs() < 1e-9);
    }
}
