use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::series;
use crate::error::{Error, Result};

/// Share of `x_max` up to which coefficients are trusted.
pub const TRUSTED_COEFF_FRACTION: f64 = 0.6;
/// Share of `x_max` up to which per-`a` diagnostics are trusted.
pub const TRUSTED_DIAG_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    /// Sup-norm of the last fixed-point update over the trusted range.
    pub final_sup_delta: f64,
    pub max_balance_residual: f64,
    /// `(s, |lhs − rhs|)` pairs of the generating identity.
    pub e1_residuals: Vec<(f64, f64)>,
    pub damping_used: f64,
    /// Exponent of the fitted tail closure, if one was used.
    pub tail_omega: Option<f64>,
}

/// Truncated series `f(x) = Σ_{i ≤ N} exp(−λ_i) x^i` plus the numerical
/// settings it was solved under.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedModel {
    pub beta: f64,
    pub n_trunc: usize,
    /// `λ_i = −ln c_i`, `i = 0..=n_trunc`; `+inf` marks a zero coefficient.
    pub lambda: Vec<f64>,
    pub x_max: f64,
    pub trusted_degree: usize,
    pub solve_report: ConvergenceReport,
}

pub fn trusted_degree_for(x_max: f64, n_trunc: usize) -> usize {
    ((TRUSTED_COEFF_FRACTION * x_max).floor() as usize).min(n_trunc)
}

impl BalancedModel {
    /// Wraps explicit log-coefficients. `beta` may be 1 here so that limit
    /// profiles such as `x e^x` can be represented.
    pub fn from_coefficients(beta: f64, lambda: Vec<f64>, x_max: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::invalid(format!("beta must lie in [0, 1], got {beta}")));
        }
        if lambda.len() < 2 {
            return Err(Error::invalid("need at least two coefficients"));
        }
        if let Some(i) = lambda.iter().position(|l| l.is_nan() || *l == f64::NEG_INFINITY) {
            return Err(Error::invalid(format!("lambda[{i}] is not a valid log-coefficient")));
        }
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::invalid(format!("x_max must be positive, got {x_max}")));
        }
        let n_trunc = lambda.len() - 1;
        Ok(BalancedModel {
            beta,
            n_trunc,
            lambda,
            x_max,
            trusted_degree: trusted_degree_for(x_max, n_trunc),
            solve_report: ConvergenceReport {
                damping_used: 1.0,
                ..Default::default()
            },
        })
    }

    /// `f = e^x`, the balanced model at `β = 0`.
    pub fn exponential(n_trunc: usize, x_max: f64) -> Self {
        let lambda = (0..=n_trunc).map(|i| ln_gamma(i as f64 + 1.0)).collect();
        Self::from_coefficients(0.0, lambda, x_max).expect("valid factorial profile")
    }

    /// `f = x e^x`, the `β → 1` limit profile.
    pub fn x_exponential(n_trunc: usize, x_max: f64) -> Self {
        let lambda = (0..=n_trunc)
            .map(|i| if i == 0 { f64::INFINITY } else { ln_gamma(i as f64) })
            .collect();
        Self::from_coefficients(1.0, lambda, x_max).expect("valid profile")
    }

    pub fn log_f(&self, x: f64) -> f64 {
        series::log_f_at(&self.lambda, x)
    }

    pub fn log_f_t(&self, t: f64) -> f64 {
        series::log_f(&self.lambda, t)
    }

    /// Largest anchor value `a` for which diagnostics are trusted.
    pub fn trusted_anchor(&self) -> f64 {
        TRUSTED_DIAG_FRACTION * self.x_max
    }
}
