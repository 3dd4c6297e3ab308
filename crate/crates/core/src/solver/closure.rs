//! Asymptotic closure of the coefficient tail.
//!
//! Moments `M_i` with `i` near or above `x_max` are distorted by the
//! integration cutoff, and the distortion would travel down the index range
//! one step per iteration. Coefficients above the trusted degree are
//! therefore replaced by the fitted form
//!
//! `λ_j ≈ ln Γ(j + 1 − ω) + γ₀ + γ₁ j + γ₂ / (j + 1 − ω)`
//!
//! using a window of trusted coefficients just below the cut.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};

/// Smallest trusted degree for which a tail fit is attempted.
pub const MIN_TRUSTED_FOR_FIT: usize = 12;
const GN_STEPS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub omega: f64,
    pub gamma: [f64; 3],
    /// Largest absolute residual over the fit window.
    pub max_residual: f64,
}

impl TailFit {
    pub fn eval(&self, j: f64) -> f64 {
        let s = j + 1.0 - self.omega;
        ln_gamma(s) + self.gamma[0] + self.gamma[1] * j + self.gamma[2] / s
    }
}

fn window(trusted: usize) -> (usize, usize) {
    let w = trusted / 3;
    (trusted - w, trusted)
}

fn linear_fit(js: &[f64], ys: &[f64], omega: f64) -> ([f64; 3], Vec<f64>) {
    let n = js.len();
    let a = DMatrix::from_fn(n, 3, |r, c| match c {
        0 => 1.0,
        1 => js[r],
        _ => 1.0 / (js[r] + 1.0 - omega),
    });
    let b = DVector::from_iterator(n, js.iter().zip(ys).map(|(j, y)| y - ln_gamma(j + 1.0 - omega)));
    let sol = a.clone().svd(true, true).solve(&b, 1e-14).expect("svd solve");
    let r = &b - &a * &sol;
    ([sol[0], sol[1], sol[2]], r.iter().copied().collect())
}

/// Fits the closure form on the window below `trusted`, starting the
/// Gauss–Newton search for `ω` at `omega0`.
pub fn fit_tail(lambda: &[f64], trusted: usize, omega0: f64) -> Result<TailFit> {
    if trusted < MIN_TRUSTED_FOR_FIT || trusted >= lambda.len() {
        return Err(Error::invalid(format!(
            "tail fit needs {MIN_TRUSTED_FOR_FIT} ≤ trusted degree < {}, got {trusted}",
            lambda.len()
        )));
    }
    let (lo, hi) = window(trusted);
    let js: Vec<f64> = (lo..=hi).map(|j| j as f64).collect();
    let ys = &lambda[lo..=hi];
    let mut omega = omega0;
    let (mut gamma, mut res) = linear_fit(&js, ys, omega);
    let mut sse: f64 = res.iter().map(|r| r * r).sum();
    for _ in 0..GN_STEPS {
        // Jacobian of the model in (ω, γ₀, γ₁, γ₂).
        let n = js.len();
        let jac = DMatrix::from_fn(n, 4, |r, c| {
            let s = js[r] + 1.0 - omega;
            match c {
                0 => -digamma(s) + gamma[2] / (s * s),
                1 => 1.0,
                2 => js[r],
                _ => 1.0 / s,
            }
        });
        let rv = DVector::from_vec(res.clone());
        let Ok(step) = jac.svd(true, true).solve(&rv, 1e-14) else {
            break;
        };
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..20 {
            let trial = omega + scale * step[0];
            if trial < lo as f64 {
                let (g, r) = linear_fit(&js, ys, trial);
                let s: f64 = r.iter().map(|v| v * v).sum();
                if s <= sse {
                    let improvement = sse - s;
                    omega = trial;
                    gamma = g;
                    res = r;
                    sse = s;
                    accepted = improvement > 1e-30 * (1.0 + s);
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted || (scale * step[0]).abs() < 1e-13 {
            break;
        }
    }
    let max_residual = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(TailFit {
        omega,
        gamma,
        max_residual,
    })
}

/// Overwrites `λ_j` for `j > trusted` with the fitted closure.
pub fn apply(lambda: &mut [f64], trusted: usize, fit: &TailFit) {
    for (j, l) in lambda.iter_mut().enumerate().skip(trusted + 1) {
        *l = fit.eval(j as f64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_shifted_gamma_profile() {
        let omega = 0.37;
        let lambda: Vec<f64> = (0..=400)
            .map(|j| {
                let j = j as f64;
                ln_gamma(j + 1.0 - omega) + 0.2 - 1e-3 * j + 0.05 / (j + 1.0 - omega)
            })
            .collect();
        let fit = fit_tail(&lambda, 180, 0.0).unwrap();
        assert!((fit.omega - omega).abs() < 1e-7, "{}", fit.omega);
        let mut l2 = lambda.clone();
        apply(&mut l2, 180, &fit);
        for j in 181..=400 {
            assert!((l2[j] - lambda[j]).abs() < 1e-7);
        }
    }

    #[test]
    fn factorials_are_a_fixed_point() {
        let lambda: Vec<f64> = (0..=100).map(|j| ln_gamma(j as f64 + 1.0)).collect();
        let fit = fit_tail(&lambda, 60, 0.3).unwrap();
        assert!(fit.omega.abs() < 1e-8);
        assert!(fit.max_residual < 1e-11);
    }

    #[test]
    fn too_few_trusted() {
        let lambda = vec![0.0; 40];
        assert!(fit_tail(&lambda, 5, 0.0).is_err());
    }
}
