//! Tail extremes of the two normalized curvatures and the gap ratio `m(b)`.

use rayon::prelude::*;
use serde::Serialize;

use super::{anchor_t, lambda_moments, u_moments};
use crate::error::{Error, Result};
use crate::solver::BalancedModel;

/// Samples per decade of the geometric grids.
pub const POINTS_PER_DECADE: usize = 41;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub b: f64,
    /// Upper end of the sampled window (`a_hi`, and `x_{a_hi}` for the
    /// continuous family); the true extremes run over an unbounded tail.
    pub a_hi: f64,
    /// Extremes of `u₂(x)/x` over `x ∈ [x_b − √b ln b, x_{a_hi}]`.
    pub m1_cont: f64,
    pub m2_cont: f64,
    /// Extremes of `(x_a + ½) λ''(a)` over `a ∈ [b − √b ln b, a_hi]`.
    pub m1_disc: f64,
    pub m2_disc: f64,
    pub m_of_b: f64,
}

/// Geometric grid from `lo` to `hi` inclusive with the given density.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=n)
        .map(|k| if k == n { hi } else { lo * (hi / lo).powf(k as f64 / n as f64) })
        .collect()
}

fn extremes(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

pub fn gap_report(model: &BalancedModel, b: f64, a_hi: f64) -> Result<GapReport> {
    if !(b >= 10.0) {
        return Err(Error::invalid(format!("b must be at least 10, got {b}")));
    }
    if !(a_hi > b && a_hi <= model.trusted_anchor()) {
        return Err(Error::invalid(format!(
            "a_hi = {a_hi} must lie in ({b}, {}]",
            model.trusted_anchor()
        )));
    }
    let spread = b.sqrt() * b.ln();
    let x_b = anchor_t(model, b)?.exp();
    let x_hi = anchor_t(model, a_hi)?.exp();
    let x_lo = (x_b - spread).max(1e-3 * x_b);
    let cont: Vec<f64> = geometric_grid(x_lo, x_hi, POINTS_PER_DECADE)
        .par_iter()
        .map(|&x| u_moments(model, x.ln()).map(|u| u.u2 / x))
        .collect::<Result<_>>()?;
    let a_lo = (b - spread).max(1.0);
    let disc: Vec<f64> = geometric_grid(a_lo, a_hi, POINTS_PER_DECADE)
        .par_iter()
        .map(|&a| {
            let x_a = anchor_t(model, a)?.exp();
            Ok((x_a + 0.5) * lambda_moments(model, a)?.d2)
        })
        .collect::<Result<_>>()?;
    let (m1_cont, m2_cont) = extremes(&cont);
    let (m1_disc, m2_disc) = extremes(&disc);
    let m_of_b = (1.0 + 3.0 * b.ln() / b.sqrt()) * m2_cont.max(m2_disc) / m1_cont.min(m1_disc);
    Ok(GapReport {
        b,
        a_hi,
        m1_cont,
        m2_cont,
        m1_disc,
        m2_disc,
        m_of_b,
    })
}
