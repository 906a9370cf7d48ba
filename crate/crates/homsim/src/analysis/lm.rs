//! Damped least squares (Levenberg–Marquardt) with box constraints.
//!
//! The caller supplies weighted residuals r(x) and their analytic Jacobian;
//! the fitter minimizes |r|². Steps solve (JᵀJ + λ·diag(JᵀJ))δ = −Jᵀr and
//! are accepted only when they reduce the objective, so the objective is
//! monotone across accepted iterations. Convergence is a relative parameter
//! step below `xtol`. A persistently singular normal matrix is reported as
//! `converged = false` with the best parameters found so far.

use crate::error::{Error, Result};

pub struct LmOptions {
    pub max_iter: usize,
    /// Relative parameter-step convergence threshold.
    pub xtol: f64,
    pub lambda_init: f64,
    /// Inclusive box constraints per parameter; steps are projected.
    pub bounds: Vec<(f64, f64)>,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iter: 500, xtol: 1e-8, lambda_init: 1e-3, bounds: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub chi2: f64,
    pub converged: bool,
    pub n_iter: usize,
    /// Objective after every accepted iteration, starting value first.
    pub chi2_history: Vec<f64>,
    /// (JᵀJ)⁻¹ at the solution; NaN-filled when singular.
    pub covariance: Vec<Vec<f64>>,
    /// sqrt(diag(covariance)).
    pub stderr: Vec<f64>,
}

/// Cholesky factorization of a symmetric positive-definite matrix in
/// row-major order; returns the lower factor or None if not SPD.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

fn cholesky_inverse(l: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = cholesky_solve(l, &e, n);
        for row in 0..n {
            inv[row][col] = x[row];
        }
    }
    // Symmetrize against round-off.
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (inv[i][j] + inv[j][i]);
            inv[i][j] = m;
            inv[j][i] = m;
        }
    }
    inv
}

fn clamp_to_bounds(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(lo, hi);
    }
}

/// Minimize |r(x)|².
///
/// `eval(x, r, jac)` fills `r` (length `n_res`) and, when requested, the
/// row-major Jacobian `jac` (n_res × x.len()).
pub fn fit<F>(eval: F, n_res: usize, x0: &[f64], opts: &LmOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64], &mut [f64], Option<&mut [f64]>),
{
    let n = x0.len();
    if n == 0 {
        return Err(Error::precondition("no free parameters"));
    }
    if n_res < n {
        return Err(Error::precondition("fewer residuals than parameters"));
    }
    let bounds = if opts.bounds.is_empty() {
        vec![(f64::NEG_INFINITY, f64::INFINITY); n]
    } else {
        opts.bounds.clone()
    };

    let mut x = x0.to_vec();
    clamp_to_bounds(&mut x, &bounds);
    let mut r = vec![0.0; n_res];
    let mut jac = vec![0.0; n_res * n];
    let mut r_trial = vec![0.0; n_res];

    eval(&x, &mut r, Some(&mut jac));
    let mut chi2: f64 = r.iter().map(|v| v * v).sum();
    let mut history = vec![chi2];
    let mut lambda = opts.lambda_init;
    let mut converged = false;
    let mut n_iter = 0;
    let mut ever_solved = false;

    'outer: for iter in 0..opts.max_iter {
        n_iter = iter + 1;
        // Normal equations.
        let mut a = vec![0.0; n * n];
        let mut g = vec![0.0; n];
        for row in 0..n_res {
            for i in 0..n {
                let ji = jac[row * n + i];
                g[i] += ji * r[row];
                for j in 0..=i {
                    a[i * n + j] += ji * jac[row * n + j];
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                a[i * n + j] = a[j * n + i];
            }
        }

        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = a.clone();
            for i in 0..n {
                // Marquardt scaling keeps the damping meaningful for wildly
                // different parameter magnitudes.
                let d = a[i * n + i];
                damped[i * n + i] = d + lambda * if d > 0.0 { d } else { 1.0 };
            }
            let Some(l) = cholesky(&damped, n) else {
                lambda *= 10.0;
                continue;
            };
            ever_solved = true;
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let delta = cholesky_solve(&l, &neg_g, n);
            let mut x_trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
            clamp_to_bounds(&mut x_trial, &bounds);
            eval(&x_trial, &mut r_trial, None);
            let chi2_trial: f64 = r_trial.iter().map(|v| v * v).sum();
            if chi2_trial.is_finite() && chi2_trial < chi2 {
                let step: f64 = x_trial
                    .iter()
                    .zip(&x)
                    .map(|(new, old)| (new - old).abs() / old.abs().max(1e-12))
                    .fold(0.0, f64::max);
                x = x_trial;
                chi2 = chi2_trial;
                history.push(chi2);
                lambda = (lambda * 0.1).max(1e-14);
                accepted = true;
                eval(&x, &mut r, Some(&mut jac));
                if step < opts.xtol {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // Cannot improve: either at a minimum (treated as converged when
            // a step was ever solvable and the gradient is tiny) or stuck on
            // a singular system.
            let gnorm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            converged = ever_solved && gnorm <= 1e-10 * chi2.max(1e-300);
            break;
        }
    }

    // Covariance from the undamped normal matrix at the solution.
    let mut a = vec![0.0; n * n];
    for row in 0..n_res {
        for i in 0..n {
            for j in 0..=i {
                a[i * n + j] += jac[row * n + i] * jac[row * n + j];
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            a[i * n + j] = a[j * n + i];
        }
    }
    let (covariance, stderr) = match cholesky(&a, n) {
        Some(l) => {
            let inv = cholesky_inverse(&l, n);
            let se = (0..n).map(|i| inv[i][i].max(0.0).sqrt()).collect();
            (inv, se)
        }
        None => {
            converged = false;
            (vec![vec![f64::NAN; n]; n], vec![f64::NAN; n])
        }
    };

    Ok(LmOutcome { params: x, chi2, converged, n_iter, chi2_history: history, covariance, stderr })
}
