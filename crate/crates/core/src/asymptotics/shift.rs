//! Moment families recentered between the two natural centers, and the
//! exact shift identities linking them.

use serde::Serialize;

use super::{anchor_t, lambda_density, moments_about, DiagnosticRow};
use crate::error::Result;
use crate::solver::BalancedModel;

/// Normalized moments of orders 0..=4 for one anchor value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentFamilies {
    /// `ln x` about `t_{a+1}` under `dx / h_a`.
    pub i: [f64; 5],
    /// `ln x` about `t̃_a`.
    pub j: [f64; 5],
    /// Index about `a` under weights `c_i x_a^i`.
    pub h: [f64; 5],
    /// Index about `n_{x_a}`.
    pub k: [f64; 5],
}

pub fn moment_families(model: &BalancedModel, row: &DiagnosticRow) -> Result<MomentFamilies> {
    let (t, w, _) = lambda_density(model, row.a)?;
    let t_a1 = anchor_t(model, row.a + 1.0)?;
    let i = moments_about(&t, &w, t_a1);
    let j = moments_about(&t, &w, row.lambda_d1);
    let logw: Vec<f64> = model
        .lambda
        .iter()
        .enumerate()
        .map(|(i, l)| i as f64 * row.t_a - l)
        .collect();
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logw.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    let tau: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let idx: Vec<f64> = (0..tau.len()).map(|i| i as f64).collect();
    Ok(MomentFamilies {
        i,
        j,
        h: moments_about(&idx, &tau, row.a),
        k: moments_about(&idx, &tau, row.n_xa),
    })
}

/// Third moment about `c − s` from the second and third moments about `c`,
/// given that the first moment about `c` equals `−s`.
pub fn recentered_third(m2: f64, m3: f64, s: f64) -> f64 {
    m3 + 3.0 * s * m2 - 2.0 * s * s * s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftResiduals {
    /// `|J₃ − (I₃ + 3δI₂ − 2δ³)|` with `δ = t_{a+1} − t̃_a`.
    pub j3: f64,
    /// `|H₃ − (K₃ + 3sK₂ − 2s³)|` with `s = n_{x_a} − a`.
    pub h3: f64,
}

pub fn shift_identities(row: &DiagnosticRow, fam: &MomentFamilies) -> ShiftResiduals {
    let delta = row.delta_small;
    let s = -row.sigma_small;
    ShiftResiduals {
        j3: (fam.j[3] - recentered_third(fam.i[2], fam.i[3], delta)).abs(),
        h3: (fam.h[3] - recentered_third(fam.k[2], fam.k[3], s)).abs(),
    }
}
