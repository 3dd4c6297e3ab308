//! Per-anchor diagnostics of a solved model: the index cumulants of `f` in
//! `t = ln x`, the continuous coefficient potential `λ(a)` and its
//! derivatives, concentration points, and the quantities built on them.

mod concentration;
mod gap;
mod limits;
mod shift;

pub use concentration::{concentration, ConcentrationReport};
pub use gap::{gap_report, GapReport};
pub use limits::{compare_models, omega_estimate, KNormalization, KProfile, OmegaEstimate};
pub use shift::{moment_families, recentered_third, shift_identities, MomentFamilies, ShiftResiduals};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::quadrature::{normalized_weights, quadrature_nodes};
use crate::numerics::{find_root_monotone, newton_bracketed, LogReal, QuadratureSpec};
use crate::solver::series;
use crate::solver::BalancedModel;

/// Largest share of `x_max` at which the index cumulants are evaluated.
pub const U_RANGE_FRACTION: f64 = 0.9;
/// Largest estimated share of index mass allowed past the truncation degree.
pub const TRUNCATION_MASS_LIMIT: f64 = 1e-10;

/// `t`-derivatives of `ln f` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UMoments {
    /// `u = x f'/f`.
    pub u: f64,
    pub u2: f64,
    pub u3: f64,
    /// Fourth cumulant `u₄ − 3u₂²`.
    pub u4: f64,
}

/// Index cumulants at `x = e^t`.
pub fn u_moments(model: &BalancedModel, t: f64) -> Result<UMoments> {
    if t.exp() > U_RANGE_FRACTION * model.x_max * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "x = {:.4} exceeds {U_RANGE_FRACTION}·x_max = {:.4}",
            t.exp(),
            U_RANGE_FRACTION * model.x_max
        )));
    }
    let c = series::cumulants(&model.lambda, t);
    if c.truncated_mass > TRUNCATION_MASS_LIMIT {
        return Err(Error::TruncationDominates {
            mass: c.truncated_mass,
            limit: model.n_trunc,
        });
    }
    Ok(UMoments {
        u: c.mean,
        u2: c.var,
        u3: c.k3,
        u4: c.k4,
    })
}

/// `t` with `u(e^t) = a`.
pub fn anchor_t(model: &BalancedModel, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::invalid(format!("anchor value must be positive, got {a}")));
    }
    newton_bracketed(
        |t| {
            let c = series::cumulants(&model.lambda, t);
            (c.mean - a, c.var)
        },
        a.ln(),
        0.5,
        1e-15,
    )
}

/// `λ(a)` and its derivatives, which are the cumulants of `t` under the
/// density proportional to `x^a / f` in `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaMoments {
    pub lambda: f64,
    /// `t̃_a = λ'(a)`, the mean of `ln x`.
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    /// `J₄ − 3J₂²`.
    pub d4: f64,
}

/// Quadrature nodes of `∫ x^a/f dx` in `t`, with normalized weights and
/// the log of the integral.
pub(crate) fn lambda_density(model: &BalancedModel, a: f64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if !(a > -1.0) {
        return Err(Error::invalid(format!("moment exponent must exceed -1, got {a}")));
    }
    let t_max = model.x_max.ln();
    let center = anchor_t(model, a + 1.0)?.min(t_max);
    let curvature = series::cumulants(&model.lambda, center).var;
    let spec = QuadratureSpec::laplace(center, curvature).with_bounds(f64::NEG_INFINITY, t_max);
    let nodes = quadrature_nodes(|t| LogReal::from_log((a + 1.0) * t - model.log_f_t(t)), &spec)?;
    let (w, log_total) = normalized_weights(&nodes);
    Ok((nodes.iter().map(|n| n.t).collect(), w, log_total))
}

/// Central moments of orders 0..=4 of `points` about `center`.
pub(crate) fn moments_about(points: &[f64], weights: &[f64], center: f64) -> [f64; 5] {
    let mut m = [0.0; 5];
    for (p, w) in points.iter().zip(weights) {
        let d = p - center;
        let mut v = *w;
        for slot in m.iter_mut() {
            *slot += v;
            v *= d;
        }
    }
    m
}

pub fn lambda_moments(model: &BalancedModel, a: f64) -> Result<LambdaMoments> {
    let (t, w, log_total) = lambda_density(model, a)?;
    let mean: f64 = t.iter().zip(&w).map(|(t, w)| t * w).sum();
    let m = moments_about(&t, &w, mean);
    Ok(LambdaMoments {
        lambda: log_total,
        d1: mean,
        d2: m[2],
        d3: m[3],
        d4: m[4] - 3.0 * m[2] * m[2],
    })
}

/// `λ(a) = ln ∫ x^a / f dx` alone.
pub fn lambda_at(model: &BalancedModel, a: f64) -> Result<f64> {
    Ok(lambda_density(model, a)?.2)
}

/// Root of an increasing `g` found by widening a bracket around `x0` in
/// steps of `step`, never going below `floor`.
pub fn expanding_root<F: FnMut(f64) -> Result<f64>>(mut g: F, x0: f64, step: f64, floor: f64, tol: f64) -> Result<f64> {
    let mut lo = (x0 - step).max(floor);
    let mut hi = x0 + step;
    let mut width = step;
    for _ in 0..60 {
        let glo = g(lo)?;
        let ghi = g(hi)?;
        if glo <= 0.0 && ghi >= 0.0 {
            let mut err = None;
            let r = find_root_monotone(
                |x| match g(x) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                },
                lo,
                hi,
                tol,
            )?;
            return match err {
                Some(e) => Err(e),
                None => Ok(r),
            };
        }
        width *= 2.0;
        if glo > 0.0 {
            lo = (lo - width).max(floor);
        }
        if ghi < 0.0 {
            hi += width;
        }
    }
    Err(Error::invalid(format!("no sign change found around {x0}")))
}

/// Every per-anchor quantity at one value of `a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub a: f64,
    pub x_a: f64,
    pub t_a: f64,
    pub lambda_a: f64,
    /// `t̃_a = λ'(a)`.
    pub lambda_d1: f64,
    pub lambda_d2: f64,
    pub lambda_d3: f64,
    pub lambda_d4: f64,
    /// `n_{x_a}`: the exponent with `λ'(n) = t_a`.
    pub n_xa: f64,
    /// `Δ_a = c(n_{x_a})/c(a) · x_a^{n_{x_a} − a}`.
    pub delta_cap: f64,
    /// `ln h_a(x_a) = ln f(x_a) + λ(a) − a t_a`.
    pub log_h: f64,
    pub nu_classic: f64,
    pub nu_refined: f64,
    pub u_d2: f64,
    pub u_d3: f64,
    pub u_d4: f64,
    pub x_a1: f64,
    /// `δ_a = t_{a+1} − t̃_a`.
    pub delta_small: f64,
    /// `σ_a = a − n_{x_a}`.
    pub sigma_small: f64,
    /// Whether `a` lies inside the trusted diagnostic range of the model.
    pub trusted: bool,
}

pub fn anchor(model: &BalancedModel, a: f64) -> Result<DiagnosticRow> {
    let t_a = anchor_t(model, a)?;
    let x_a = t_a.exp();
    let t_a1 = anchor_t(model, a + 1.0)?;
    let lm = lambda_moments(model, a)?;
    let n_xa = expanding_root(|n| Ok(lambda_moments(model, n)?.d1 - t_a), a - 0.5, 1.0, -1.0 + 1e-9, 1e-12)?;
    let lambda_n = lambda_at(model, n_xa)?;
    let um = u_moments(model, t_a)?;
    let log_h = model.log_f_t(t_a) + lm.lambda - a * t_a;
    let h = log_h.exp();
    Ok(DiagnosticRow {
        a,
        x_a,
        t_a,
        lambda_a: lm.lambda,
        lambda_d1: lm.d1,
        lambda_d2: lm.d2,
        lambda_d3: lm.d3,
        lambda_d4: lm.d4,
        n_xa,
        delta_cap: (lm.lambda - lambda_n + (n_xa - a) * t_a).exp(),
        log_h,
        nu_classic: h / x_a.sqrt(),
        nu_refined: h / (x_a + 1.0 / 6.0).sqrt(),
        u_d2: um.u2,
        u_d3: um.u3,
        u_d4: um.u4,
        x_a1: t_a1.exp(),
        delta_small: t_a1 - lm.d1,
        sigma_small: a - n_xa,
        trusted: a <= model.trusted_anchor(),
    })
}
