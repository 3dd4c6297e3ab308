//! Sum versus integral of the normalized coefficient profile
//! `ζ_a(i) = c(i)/c(a) · x_a^{i−a}` and its recentered moments.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{anchor_t, expanding_root};
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, LogReal};
use crate::solver::moments::MomentGrid;
use crate::solver::BalancedModel;

/// Profile values this far below the peak (in log) are treated as zero.
const NEGLIGIBLE_LOG: f64 = 90.0;
/// Width of the Gauss–Legendre panels of the integral.
const PANEL_WIDTH: f64 = 2.0;

/// `ζ_a` for one model and anchor. `λ(i)` is evaluated with one fixed
/// quadrature rule for every `i`, so the profile is a smooth function of
/// `i` down to rounding.
#[derive(Debug, Clone)]
pub struct ZetaContext {
    grid: MomentGrid,
    pub a: f64,
    pub t_a: f64,
    pub lambda_a: f64,
}

impl ZetaContext {
    pub fn new(model: &BalancedModel, a: f64) -> Result<Self> {
        let t_a = anchor_t(model, a)?;
        let grid = MomentGrid::new(&model.lambda, model.x_max);
        let lambda_a = grid.log_moment(a);
        Ok(ZetaContext {
            grid,
            a,
            t_a,
            lambda_a,
        })
    }

    /// `ln ζ_a(i)`; `-inf` for `i ≤ −1`.
    pub fn log_zeta(&self, i: f64) -> Result<f64> {
        if i <= -1.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.lambda_a - self.grid.log_moment(i) + (i - self.a) * self.t_a)
    }

    pub fn zeta(&self, i: f64) -> Result<LogReal> {
        Ok(LogReal::from_log(self.log_zeta(i)?))
    }

    /// `n_{x_a}`, the maximizer of `ζ_a`.
    pub fn n_xa(&self) -> Result<f64> {
        expanding_root(
            |n| Ok(self.grid.log_moment_and_mean(n).1 - self.t_a),
            self.a - 0.5,
            1.0,
            -1.0 + 1e-9,
            1e-12,
        )
    }
}

pub fn zeta(model: &BalancedModel, a: f64, i: f64) -> Result<LogReal> {
    ZetaContext::new(model, a)?.zeta(i)
}

/// Stored integer samples of `ζ_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaProfile {
    pub a: f64,
    pub x_a: f64,
    pub values: BTreeMap<i64, LogReal>,
    pub i_max: i64,
}

impl ZetaProfile {
    /// Whether forward differences change sign exactly once.
    pub fn is_unimodal(&self) -> bool {
        let v: Vec<f64> = self.values.values().map(|z| z.to_real()).collect();
        let signs: Vec<bool> = v.windows(2).map(|w| w[1] > w[0]).collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count() <= 1
    }
}

/// Upper summation limit `a + 15√a`.
pub fn i_max_for(a: f64) -> i64 {
    (a + 15.0 * a.sqrt()).ceil() as i64
}

pub fn profile(model: &BalancedModel, a: f64) -> Result<ZetaProfile> {
    let ctx = ZetaContext::new(model, a)?;
    let i_max = i_max_for(a);
    let values = (0..=i_max)
        .into_par_iter()
        .map(|i| Ok((i, ctx.zeta(i as f64)?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();
    Ok(ZetaProfile {
        a,
        x_a: ctx.t_a.exp(),
        values,
        i_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumVsIntegral {
    pub a: f64,
    pub j: u32,
    pub sum: f64,
    pub integral: f64,
    /// Relative for even `j`, absolute for odd `j`.
    pub err: f64,
}

/// `Σ_{i=0}^{i_max} (i − n_{x_a})^j ζ_a(i)` against the integral of the same
/// profile over `[0, i_max]`.
pub fn sum_vs_integral(model: &BalancedModel, a: f64, j: u32) -> Result<SumVsIntegral> {
    if j > 3 {
        return Err(Error::invalid(format!("moment order must be 0..=3, got {j}")));
    }
    let ctx = ZetaContext::new(model, a)?;
    let n0 = ctx.n_xa()?;
    let i_max = i_max_for(a);
    let weight = |i: f64, lz: f64| (i - n0).powi(j as i32) * lz.exp();

    let log_z: Vec<f64> = (0..=i_max)
        .into_par_iter()
        .map(|i| ctx.log_zeta(i as f64))
        .collect::<Result<_>>()?;
    let peak = log_z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first = log_z.iter().position(|v| *v > peak - NEGLIGIBLE_LOG).unwrap_or(0);
    let last = log_z.iter().rposition(|v| *v > peak - NEGLIGIBLE_LOG).unwrap_or(log_z.len() - 1);
    let sum: f64 = (first..=last).map(|i| weight(i as f64, log_z[i])).sum();

    let lo = first.saturating_sub(1) as f64;
    let hi = ((last + 1) as i64).min(i_max) as f64;
    let n_panels = (((hi - lo) / PANEL_WIDTH).ceil() as usize).max(1);
    let h = (hi - lo) / n_panels as f64;
    let (gx, gw) = gauss_legendre(16);
    let nodes: Vec<(f64, f64)> = (0..n_panels)
        .flat_map(|p| {
            let mid = lo + h * (p as f64 + 0.5);
            gx.iter()
                .zip(&gw)
                .map(move |(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
                .collect::<Vec<_>>()
        })
        .collect();
    let integral: f64 = nodes
        .par_iter()
        .map(|&(i, w)| Ok(w * weight(i, ctx.log_zeta(i)?)))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    let err = if j.is_multiple_of(2) {
        (sum / integral - 1.0).abs()
    } else {
        (sum - integral).abs()
    };
    Ok(SumVsIntegral {
        a,
        j,
        sum,
        integral,
        err,
    })
}

/// Least-squares slope of `ln err` against `ln a`.
pub fn log_log_slope(a: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = a.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let a = [25.0, 50.0, 100.0, 200.0];
        let e: Vec<f64> = a.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        assert!((log_log_slope(&a, &e) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn exponential_profile_values() {
        let m = BalancedModel::exponential(400, 300.0);
        let ctx = ZetaContext::new(&m, 50.0).unwrap();
        assert!((ctx.zeta(50.0).unwrap().to_real() - 1.0).abs() < 1e-12);
        assert!((ctx.zeta(51.0).unwrap().to_real() - 50.0 / 51.0).abs() < 1e-11);
        assert!(ctx.zeta(-0.999).unwrap().to_real() < 1e-6);
        assert!(ctx.zeta(-1.0).unwrap().is_zero());
    }
}
