//! Damped Newton iteration with central-difference Jacobians.

use nalgebra::{DMatrix, DVector};

pub const MAX_ITERATIONS: usize = 50;
pub const TOLERANCE: f64 = 1e-12;
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Central-difference Jacobian of `f` at `x`, `m` rows by `x.len()` columns.
pub fn jacobian<F>(f: &F, x: &[f64], step: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut xp = x.to_vec();
    for k in 0..n {
        xp[k] = x[k] + step;
        let fp = f(&xp);
        xp[k] = x[k] - step;
        let fm = f(&xp);
        xp[k] = x[k];
        cols.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * step)).collect::<Vec<_>>());
    }
    let m = cols[0].len();
    DMatrix::from_fn(m, n, |i, j| cols[j][i])
}

/// Square damped Newton: halve the step until the max-norm residual decreases.
pub fn solve<F>(f: F, x0: &[f64], tol: f64) -> NewtonOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut res = max_abs(&fx);
    for it in 0..MAX_ITERATIONS {
        if !res.is_finite() {
            break;
        }
        if res < tol {
            return NewtonOutcome { x, residual: res, converged: true, iterations: it };
        }
        let jac = jacobian(&f, &x, FD_STEP);
        let rhs = -DVector::from_vec(fx.clone());
        let Some(dx) = jac.lu().solve(&rhs) else { break };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-4 {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + lambda * d).collect();
            let ft = f(&trial);
            let rt = max_abs(&ft);
            if rt < res {
                x = trial;
                fx = ft;
                res = rt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    NewtonOutcome { x, converged: res < tol, residual: res, iterations: MAX_ITERATIONS }
}

/// Ratio of the extreme singular values; infinite for a singular matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_circle_line_intersection() {
        let out = solve(|x| vec![x[0] * x[0] + x[1] * x[1] - 1.0, x[0] - x[1]], &[1.0, 0.2], 1e-13);
        assert!(out.converged);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.x[0] - r).abs() < 1e-12 && (out.x[1] - r).abs() < 1e-12);
    }

    #[test]
    fn jacobian_of_linear_map_is_exact() {
        let j = jacobian(&|x: &[f64]| vec![2.0 * x[0] - x[1], 3.0 * x[1]], &[0.4, -1.0], FD_STEP);
        assert!((j[(0, 0)] - 2.0).abs() < 1e-9 && (j[(0, 1)] + 1.0).abs() < 1e-9);
        assert!((j[(1, 1)] - 3.0).abs() < 1e-9 && j[(1, 0)].abs() < 1e-9);
    }

    #[test]
    fn singular_matrix_has_infinite_condition() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(condition_number(&m) > 1e12);
    }
}
