//! Convexity and mass concentration of `e^{−g_a}` in `t` and `e^{−G_a}` on
//! the integers.

use serde::Serialize;

use super::{anchor_t, expanding_root, lambda_at, lambda_moments};
use crate::error::Result;
use crate::numerics::{integrate_logspace, LogReal, QuadratureSpec};
use crate::solver::{series, BalancedModel};

const T_GRID_POINTS: usize = 41;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub a: f64,
    /// Half-width `3 ln a / √a` of the window around `t_{a+1}`.
    pub window: f64,
    /// Share of `∫ e^{−g_a}` outside the window.
    pub tail_fraction: f64,
    /// Smallest second difference of `g_a` on a `t`-grid over the window.
    pub min_g_second_diff: f64,
    /// Smallest second difference of `G_a` on the integers within
    /// `√a ln a` of `n_{x_a}`.
    pub min_big_g_second_diff: f64,
}

pub fn concentration(model: &BalancedModel, a: f64) -> Result<ConcentrationReport> {
    let t_c = anchor_t(model, a + 1.0)?;
    let t_max = model.x_max.ln();
    let window = 3.0 * a.ln() / a.sqrt();
    let curvature = series::cumulants(&model.lambda, t_c).var;
    let g = |t: f64| LogReal::from_log((a + 1.0) * t - model.log_f_t(t));
    let full = QuadratureSpec::laplace(t_c, curvature).with_bounds(f64::NEG_INFINITY, t_max);
    let total = integrate_logspace(g, &full)?;
    let left = integrate_logspace(g, &full.with_bounds(f64::NEG_INFINITY, t_c - window))?;
    let right = if t_c + window < t_max {
        integrate_logspace(g, &full.with_bounds(t_c + window, t_max))?
    } else {
        LogReal::ZERO
    };
    let tail_fraction = ((left + right) / total).to_real();

    let h = 2.0 * window / (T_GRID_POINTS - 1) as f64;
    let lf: Vec<f64> = (0..T_GRID_POINTS)
        .map(|k| model.log_f_t(t_c - window + k as f64 * h))
        .collect();
    let min_g_second_diff = lf
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::INFINITY, f64::min);

    let t_a = anchor_t(model, a)?;
    let n_xa = expanding_root(
        |n| Ok(lambda_moments(model, n)?.d1 - t_a),
        a - 0.5,
        1.0,
        -1.0 + 1e-9,
        1e-12,
    )?;
    let reach = a.sqrt() * a.ln();
    let lo = (n_xa - reach).ceil().max(0.0) as i64;
    let hi = (n_xa + reach).floor() as i64;
    let lam: Vec<f64> = (lo..=hi)
        .map(|i| lambda_at(model, i as f64))
        .collect::<Result<_>>()?;
    let min_big_g_second_diff = lam
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::INFINITY, f64::min);
    Ok(ConcentrationReport {
        a,
        window,
        tail_fraction,
        min_g_second_diff,
        min_big_g_second_diff,
    })
}
