//! Levenberg–Marquardt for small dense least-squares problems.

#![allow(clippy::needless_range_loop)]

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{fabs, sqrt};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when every step component is below `x_tol·(|p| + x_tol)`.
    pub x_tol: f64,
    /// Stop when the relative cost reduction falls below this.
    pub f_tol: f64,
    /// Central-difference step for the Jacobian.
    pub diff_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            x_tol: 1e-12,
            f_tol: 1e-14,
            diff_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult<const N: usize> {
    pub params: [f64; N],
    /// Σ r².
    pub cost: f64,
    /// (JᵀJ)⁻¹ at the solution, if invertible.
    pub covariance: Option<[[f64; N]; N]>,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `a·x = b` in place by Gaussian elimination with partial pivoting.
pub fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| fabs(a[i][col]).partial_cmp(&fabs(a[j][col])).unwrap())?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut s = b[row];
        for k in row + 1..N {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

fn invert<const N: usize>(a: [[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut inv = [[0.0; N]; N];
    for j in 0..N {
        let mut e = [0.0; N];
        e[j] = 1.0;
        let col = solve(a, e)?;
        for i in 0..N {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Minimizes Σ r(p)² starting from `p0`, keeping `p` inside `[lo, hi]`.
///
/// `residuals` fills its output slice and returns false when `p` is not
/// admissible (treated as an infinitely bad step).
pub fn levenberg_marquardt<const N: usize, F>(residuals: F, m: usize, p0: [f64; N], lo: [f64; N], hi: [f64; N], opts: &LmOptions) -> LmResult<N>
where
    F: Fn(&[f64; N], &mut [f64]) -> bool,
{
    let clamp = |p: [f64; N]| {
        let mut q = p;
        for i in 0..N {
            q[i] = q[i].clamp(lo[i], hi[i]);
        }
        q
    };
    let eval = |p: &[f64; N], out: &mut [f64]| -> f64 {
        if residuals(p, out) && out.iter().all(|x| x.is_finite()) {
            cost_of(out)
        } else {
            f64::INFINITY
        }
    };
    let mut p = clamp(p0);
    let mut r = vec![0.0; m];
    let mut cost = eval(&p, &mut r);
    let mut jac: Vec<[f64; N]> = vec![[0.0; N]; m];
    let (mut rp, mut rm, mut trial) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    let jacobian = |p: &[f64; N], jac: &mut Vec<[f64; N]>, rp: &mut [f64], rm: &mut [f64]| -> bool {
        for k in 0..N {
            let h = opts.diff_step * (1.0 + fabs(p[k]));
            let (mut a, mut b) = (*p, *p);
            a[k] += h;
            b[k] -= h;
            if !(eval(&a, rp).is_finite() && eval(&b, rm).is_finite()) {
                return false;
            }
            for i in 0..m {
                jac[i][k] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        true
    };

    if cost.is_finite() {
        while iterations < opts.max_iterations {
            iterations += 1;
            if !jacobian(&p, &mut jac, &mut rp, &mut rm) {
                break;
            }
            let mut a = [[0.0; N]; N];
            let mut g = [0.0; N];
            for i in 0..m {
                for j in 0..N {
                    g[j] += jac[i][j] * r[i];
                    for k in 0..N {
                        a[j][k] += jac[i][j] * jac[i][k];
                    }
                }
            }
            // Parameters on a bound whose descent direction points outward
            // are held fixed for this iteration.
            let pinned: [bool; N] = core::array::from_fn(|j| (p[j] <= lo[j] && g[j] > 0.0) || (p[j] >= hi[j] && g[j] < 0.0));
            let mut accepted = false;
            let mut tiny_step = false;
            while lambda < 1e16 {
                let mut damped = a;
                let mut neg_g = g.map(|x| -x);
                for j in 0..N {
                    damped[j][j] += lambda * a[j][j].max(1e-12);
                    if pinned[j] {
                        for k in 0..N {
                            damped[j][k] = 0.0;
                            damped[k][j] = 0.0;
                        }
                        damped[j][j] = 1.0;
                        neg_g[j] = 0.0;
                    }
                }
                let Some(step) = solve(damped, neg_g) else {
                    lambda *= 4.0;
                    continue;
                };
                let cand = clamp(core::array::from_fn(|j| p[j] + step[j]));
                let actual: [f64; N] = core::array::from_fn(|j| cand[j] - p[j]);
                tiny_step = (0..N).all(|j| fabs(actual[j]) <= opts.x_tol * (fabs(p[j]) + opts.x_tol));
                let c = eval(&cand, &mut trial);
                if c < cost {
                    let rel_drop = (cost - c) / cost.max(f64::MIN_POSITIVE);
                    p = cand;
                    core::mem::swap(&mut r, &mut trial);
                    cost = c;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if rel_drop < opts.f_tol {
                        tiny_step = true;
                    }
                    break;
                }
                if tiny_step {
                    break;
                }
                lambda *= 4.0;
            }
            if tiny_step || !accepted || cost == 0.0 {
                converged = true;
                break;
            }
        }
    }

    let covariance = if cost.is_finite() && jacobian(&p, &mut jac, &mut rp, &mut rm) {
        let mut a = [[0.0; N]; N];
        for row in &jac {
            for j in 0..N {
                for k in 0..N {
                    a[j][k] += row[j] * row[k];
                }
            }
        }
        invert(a)
    } else {
        None
    };
    LmResult {
        params: p,
        cost,
        covariance,
        iterations,
        converged: converged && cost.is_finite(),
    }
}

/// Standard errors from a covariance matrix.
pub fn std_errors<const N: usize>(cov: &[[f64; N]; N]) -> [f64; N] {
    core::array::from_fn(|i| sqrt(cov[i][i].max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::exp;

    #[test]
    fn recovers_exponential_decay() {
        let ts: Vec<f64> = (0..30).map(|i| 0.2 * i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.5 * exp(-t / 1.7)).collect();
        let res = levenberg_marquardt(
            |p: &[f64; 2], out: &mut [f64]| {
                for (i, t) in ts.iter().enumerate() {
                    out[i] = p[0] * exp(-t / p[1]) - ys[i];
                }
                true
            },
            ts.len(),
            [1.0, 0.5],
            [0.0, 1e-3],
            [10.0, 100.0],
            &LmOptions::default(),
        );
        assert!(res.converged);
        assert!((res.params[0] - 2.5).abs() < 1e-9);
        assert!((res.params[1] - 1.7).abs() < 1e-9);
    }

    #[test]
    fn respects_bounds() {
        let res = levenberg_marquardt(
            |p: &[f64; 1], out: &mut [f64]| {
                out[0] = p[0] - 5.0;
                true
            },
            1,
            [0.0],
            [-1.0],
            [2.0],
            &LmOptions::default(),
        );
        assert_eq!(res.params[0], 2.0);
    }

    #[test]
    fn solves_linear_system() {
        let x = solve([[2.0, 1.0], [1.0, 3.0]], [3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0]).is_none());
    }
}
