//! Large-`x` limits of `ln f − x`, and coefficient ratios between models.

use serde::Serialize;

use super::u_moments;
use crate::error::{Error, Result};
use crate::solver::BalancedModel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaEstimate {
    /// `u(x) − x` at the largest grid point.
    pub omega_hat: f64,
    /// Spread of `u(x) − x` over the upper half of the grid.
    pub error_bar: f64,
    /// `f(x) / (x^ω̂ e^x)` at the largest grid point.
    pub c_beta_hat: f64,
    /// `(x, u(x) − x)` over the whole grid.
    pub sequence: Vec<(f64, f64)>,
}

pub fn omega_estimate(model: &BalancedModel, x_grid: &[f64]) -> Result<OmegaEstimate> {
    let mut xs = x_grid.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 4 {
        return Err(Error::GridTooNarrow(format!("{} distinct points, need 4", xs.len())));
    }
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    if !(lo > 0.0) || hi / lo < 4.0 {
        return Err(Error::GridTooNarrow(format!("grid spans [{lo}, {hi}], need a factor of 4")));
    }
    let sequence: Vec<(f64, f64)> = xs
        .iter()
        .map(|&x| Ok((x, u_moments(model, x.ln())?.u - x)))
        .collect::<Result<_>>()?;
    let omega_hat = sequence[sequence.len() - 1].1;
    let upper = &sequence[sequence.len() / 2..];
    let (mn, mx) = upper
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, v)| (a.min(v), b.max(v)));
    let c_beta_hat = (model.log_f(hi) - hi - omega_hat * hi.ln()).exp();
    Ok(OmegaEstimate {
        omega_hat,
        error_bar: mx - mn,
        c_beta_hat,
        sequence,
    })
}

/// Normalization applied to both models before forming coefficient ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KNormalization {
    /// As solved: balance constant 1 and `f(0) = 1`.
    AsSolved,
    /// Rescaled in `x` so that `c_1 = 1`.
    UnitLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KProfile {
    pub indices: Vec<usize>,
    /// `k(i) = c_i(second) / c_i(first)`.
    pub k: Vec<f64>,
    /// `ln k(i+1) − ln k(i)`.
    pub dlogk: Vec<f64>,
    pub min_k: f64,
    /// Whether `ln k` increases over the upper half of the range.
    pub eventually_increasing: bool,
}

fn normalized(lambda: &[f64], norm: KNormalization) -> Vec<f64> {
    match norm {
        KNormalization::AsSolved => lambda.to_vec(),
        KNormalization::UnitLinear => {
            let l1 = lambda[1];
            lambda.iter().enumerate().map(|(i, l)| l - i as f64 * l1).collect()
        }
    }
}

pub fn compare_models(
    first: &BalancedModel,
    second: &BalancedModel,
    range: usize,
    norm: KNormalization,
) -> Result<KProfile> {
    let limit = first.trusted_degree.min(second.trusted_degree);
    if range < 2 || range > limit {
        return Err(Error::invalid(format!("index range {range} must lie in [2, {limit}]")));
    }
    let l1 = normalized(&first.lambda, norm);
    let l2 = normalized(&second.lambda, norm);
    let indices: Vec<usize> = (1..=range).collect();
    let logk: Vec<f64> = indices.iter().map(|&i| l1[i] - l2[i]).collect();
    let dlogk: Vec<f64> = logk.windows(2).map(|w| w[1] - w[0]).collect();
    let k: Vec<f64> = logk.iter().map(|v| v.exp()).collect();
    let min_k = k.iter().copied().fold(f64::INFINITY, f64::min);
    let eventually_increasing = dlogk[dlogk.len() / 2..].iter().all(|d| *d > 0.0);
    Ok(KProfile {
        indices,
        k,
        dlogk,
        min_k,
        eventually_increasing,
    })
}
