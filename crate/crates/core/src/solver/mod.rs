//! Balanced coefficients by fixed-point iteration of the moment map.
//!
//! The balanced model satisfies `c_i M_i = 1` for `i ≥ 1` and
//! `c_0 M_0 = 1 − β`, where `M_i = ∫ x^i / f dx`. In log form the update is
//! `λ_i ← ln M_i` (and `λ_0 ← ln M_0 − ln(1 − β)`).

pub mod anderson;
pub mod closure;
pub mod model;
pub mod moments;
pub mod persist;
pub mod series;

use crate::error::{Error, Result};
use crate::numerics::{integrate_logspace, LogReal, QuadratureSpec};
use anderson::Anderson;
use moments::MomentGrid;

pub use model::{trusted_degree_for, BalancedModel, ConvergenceReport};
pub use persist::{load_model, save_model, FORMAT_VERSION};

/// `s` values at which the generating identity is checked after a solve.
pub const E1_SAMPLES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const ANDERSON_MEMORY: usize = 6;
const REDUCED_DAMPING: f64 = 0.5;

/// Smallest truncation degree accepted for a given cutoff: five standard
/// deviations of the index distribution at `x_max` above its mean.
pub fn min_n_trunc(x_max: f64) -> usize {
    (x_max + 5.0 * x_max.sqrt()).ceil() as usize
}

fn check_finite(lambda: &[f64], allow_inf_head: bool) -> Result<()> {
    for (i, l) in lambda.iter().enumerate() {
        let ok = l.is_finite() || (allow_inf_head && i == 0 && *l == f64::INFINITY);
        if !ok {
            return Err(Error::DivergentIterate { index: i });
        }
    }
    Ok(())
}

/// `ln M_i` targets for `i = 0..=top`, with the `(1 − β)` factor folded
/// into the constant term.
fn targets(lambda: &[f64], x_max: f64, beta: f64, top: usize) -> Vec<f64> {
    let grid = MomentGrid::new(lambda, x_max);
    let mut m = grid.log_moments(top);
    m[0] -= (-beta).ln_1p();
    m
}

fn uses_closure(model_len: usize, trusted: usize) -> bool {
    trusted + 1 < model_len
}

/// One damped application of the moment map. Coefficients above the
/// trusted degree are replaced by the fitted tail closure of the updated
/// trusted ones.
pub fn t_step(model: &BalancedModel, damping: f64) -> Result<BalancedModel> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::invalid(format!("damping must lie in (0, 1], got {damping}")));
    }
    check_finite(&model.lambda, false)?;
    let n = model.lambda.len();
    let trusted = model.trusted_degree.min(n - 1);
    let closure = uses_closure(n, trusted);
    let top = if closure { trusted } else { n - 1 };
    let target = targets(&model.lambda, model.x_max, model.beta, top);
    let mut next = model.clone();
    for (l, m) in next.lambda.iter_mut().zip(&target) {
        *l = (1.0 - damping) * *l + damping * m;
    }
    if closure {
        let mut fitted = next.lambda.clone();
        let fit = closure::fit_tail(&fitted, trusted, model.solve_report.tail_omega.unwrap_or(0.0))?;
        closure::apply(&mut fitted, trusted, &fit);
        for ((l, old), fit) in next.lambda.iter_mut().zip(&model.lambda).zip(&fitted).skip(trusted + 1) {
            *l = (1.0 - damping) * old + damping * fit;
        }
        next.solve_report.tail_omega = Some(fit.omega);
    }
    check_finite(&next.lambda, false)?;
    Ok(next)
}

/// Median of `ln(c_i M_i)` over `1..=trusted`: the log of the balance
/// constant `C` of an approximately balanced model.
fn log_balance_constant(model: &BalancedModel) -> f64 {
    let top = model.trusted_degree.max(1).min(model.lambda.len() - 1);
    let grid = MomentGrid::new(&model.lambda, model.x_max);
    let mut d: Vec<f64> = (1..=top).map(|i| grid.log_moment(i as f64) - model.lambda[i]).collect();
    d.sort_by(f64::total_cmp);
    let k = d.len();
    if k % 2 == 1 {
        d[k / 2]
    } else {
        0.5 * (d[k / 2 - 1] + d[k / 2])
    }
}

/// Rescales `f(x) ↦ κ f(μ x)` with `μ = C` and `κ = 1/c_0`, so that the
/// balance constant becomes 1 and `f(0) = 1`.
pub fn finalize_normalization(model: &BalancedModel) -> BalancedModel {
    let mut out = model.clone();
    // A large rescale pushes the upper moments past `x_max` and biases the
    // median, so the estimate is repeated until it settles.
    for _ in 0..8 {
        let log_mu = log_balance_constant(&out);
        if !log_mu.is_finite() {
            break;
        }
        for (i, l) in out.lambda.iter_mut().enumerate() {
            *l -= i as f64 * log_mu;
        }
        if log_mu.abs() < 1e-13 {
            break;
        }
    }
    let log_kappa = out.lambda[0];
    if log_kappa.is_finite() {
        for l in out.lambda.iter_mut() {
            *l -= log_kappa;
        }
    }
    out
}

/// Largest deviation from the balance conditions over the trusted range:
/// `|c_i M_i − 1|` for `i ≥ 1` and `|c_0 M_0 − (1 − β)|`.
pub fn max_balance_residual(model: &BalancedModel) -> f64 {
    let top = model.trusted_degree.min(model.lambda.len() - 1);
    let grid = MomentGrid::new(&model.lambda, model.x_max);
    let m = grid.log_moments(top);
    let mut worst = ((m[0] - model.lambda[0]).exp() - (1.0 - model.beta)).abs();
    for (mi, li) in m.iter().zip(&model.lambda).skip(1) {
        worst = worst.max((mi - li).exp_m1().abs());
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct E1Check {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Direct quadrature of `∫₀^{x_max} f(sx)/f(x) dx` against `1/(1−s) − β`.
pub fn check_e1(model: &BalancedModel, s: f64) -> Result<E1Check> {
    if !(0.0..=0.95).contains(&s) {
        return Err(Error::invalid(format!("s must lie in [0, 0.95], got {s}")));
    }
    let t_max = model.x_max.ln();
    let log_ratio = |t: f64| model.log_f(s * t.exp()) - model.log_f_t(t);
    let center = (-(-s).ln_1p()).min(t_max - 1.0);
    let spec = QuadratureSpec::new(center, 12.0).with_bounds(f64::NEG_INFINITY, t_max);
    let nodes = crate::numerics::quadrature::quadrature_nodes(|t| LogReal::from_log(t + log_ratio(t)), &spec)?;
    let peak = nodes
        .iter()
        .map(|n| log_ratio(n.t))
        .chain(std::iter::once(log_ratio(t_max)))
        .fold(f64::NEG_INFINITY, f64::max);
    let at_end = log_ratio(t_max);
    let ratio = (at_end - peak).exp();
    if ratio > 1e-12 {
        return Err(Error::TailNotConverged { ratio });
    }
    let lhs = integrate_logspace(|t| LogReal::from_log(t + log_ratio(t)), &spec)?.to_real();
    let rhs = 1.0 / (1.0 - s) - model.beta;
    Ok(E1Check {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Initial coefficients for a solve: the warm start resized to `n_trunc`
/// and moved along `ln Γ(i + 1 − β)` to the new `β`, or `ln Γ(i+1)` for a
/// cold start.
fn initial_lambda(beta: f64, n_trunc: usize, warm: Option<&BalancedModel>) -> Result<(Vec<f64>, f64)> {
    let (mut l, omega) = resized_warm_start(n_trunc, warm)?;
    if let Some(w) = warm {
        let lg = statrs::function::gamma::ln_gamma;
        for (i, v) in l.iter_mut().enumerate() {
            let i = i as f64;
            *v += lg(i + 1.0 - beta) - lg(i + 1.0 - w.beta);
        }
        return Ok((l, omega + beta - w.beta));
    }
    Ok((l, omega))
}

fn resized_warm_start(n_trunc: usize, warm: Option<&BalancedModel>) -> Result<(Vec<f64>, f64)> {
    let cold: Vec<f64> = (0..=n_trunc)
        .map(|i| statrs::function::gamma::ln_gamma(i as f64 + 1.0))
        .collect();
    let Some(w) = warm else {
        return Ok((cold, 0.0));
    };
    check_finite(&w.lambda, false)?;
    let omega = w.solve_report.tail_omega.unwrap_or(0.0);
    if w.lambda.len() > n_trunc {
        return Ok((w.lambda[..=n_trunc].to_vec(), omega));
    }
    let mut l = w.lambda.clone();
    l.resize(n_trunc + 1, 0.0);
    let known = w.lambda.len() - 1;
    let fit_at = w.trusted_degree.min(known);
    match closure::fit_tail(&w.lambda, fit_at, omega) {
        Ok(fit) if fit_at >= closure::MIN_TRUSTED_FOR_FIT => {
            for (j, v) in l.iter_mut().enumerate().skip(known + 1) {
                *v = fit.eval(j as f64);
            }
        }
        _ => {
            let off = w.lambda[known] - cold[known];
            for (j, v) in l.iter_mut().enumerate().skip(known + 1) {
                *v = cold[j] + off;
            }
        }
    }
    Ok((l, omega))
}

/// Fixed-point map restricted to the trusted coefficients: the moment map
/// with the constant term pinned, which removes the `κ` gauge.
struct PinnedMap {
    beta: f64,
    x_max: f64,
    n: usize,
    trusted: usize,
    omega: f64,
}

impl PinnedMap {
    fn extend(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let mut full = x.to_vec();
        if self.trusted + 1 < self.n {
            full.resize(self.n, 0.0);
            let fit = closure::fit_tail(&full, self.trusted, self.omega)?;
            self.omega = fit.omega;
            closure::apply(&mut full, self.trusted, &fit);
        }
        Ok(full)
    }

    /// Returns `G(x) − x`.
    fn residual(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let full = self.extend(x)?;
        check_finite(&full, false)?;
        let m = targets(&full, self.x_max, self.beta, self.trusted);
        check_finite(&m, false)?;
        let shift = m[0] - x[0];
        Ok(m.iter().zip(x).map(|(mi, xi)| mi - shift - xi).collect())
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves the balance conditions for `beta`, then normalizes to `C = 1`
/// and `f(0) = 1`.
pub fn solve(
    beta: f64,
    n_trunc: usize,
    x_max: f64,
    tol: f64,
    max_iter: usize,
    warm_start: Option<&BalancedModel>,
) -> Result<BalancedModel> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::invalid(format!("beta must lie in [0, 1), got {beta}")));
    }
    if !(x_max > 1.0 && x_max.is_finite()) {
        return Err(Error::invalid(format!("x_max must exceed 1, got {x_max}")));
    }
    if n_trunc < min_n_trunc(x_max) {
        return Err(Error::invalid(format!(
            "n_trunc = {n_trunc} is too small for x_max = {x_max}; need at least {}",
            min_n_trunc(x_max)
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol must be positive, got {tol}")));
    }
    let trusted = trusted_degree_for(x_max, n_trunc);
    if trusted < n_trunc && trusted < closure::MIN_TRUSTED_FOR_FIT {
        return Err(Error::invalid(format!("x_max = {x_max} leaves too few trusted coefficients")));
    }
    let (lambda0, omega0) = initial_lambda(beta, n_trunc, warm_start)?;
    let mut map = PinnedMap {
        beta,
        x_max,
        n: n_trunc + 1,
        trusted,
        omega: omega0,
    };
    let mut acc = Anderson::new(ANDERSON_MEMORY);
    let mut theta = 1.0;
    let mut x = lambda0[..=trusted].to_vec();
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut signs: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut last_sup = f64::INFINITY;
    let mut converged = None;
    while iterations < max_iter {
        iterations += 1;
        let f = match map.residual(&x) {
            Ok(f) => f,
            Err(e @ Error::DivergentIterate { .. }) => {
                let Some((_, bx, bf)) = &best else { return Err(e) };
                acc.reset();
                x = bx.iter().zip(bf).map(|(a, b)| a + REDUCED_DAMPING * b).collect();
                theta = REDUCED_DAMPING;
                continue;
            }
            Err(e) => return Err(e),
        };
        let sup = sup_norm(&f);
        last_sup = sup;
        if sup < tol {
            converged = Some(x.iter().zip(&f).map(|(a, b)| a + b).collect::<Vec<_>>());
            break;
        }
        let (k, _) = f
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
        signs.push(f[k].signum());
        let alternating = signs.len() >= 4 && signs[signs.len() - 4..].windows(2).all(|w| w[0] != w[1]);
        if alternating && theta == 1.0 {
            theta = REDUCED_DAMPING;
        }
        let best_sup = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        if sup > 1e3 * best_sup {
            let (_, bx, bf) = best.as_ref().expect("best exists when finite");
            acc.reset();
            x = bx.iter().zip(bf).map(|(a, b)| a + theta * b).collect();
            continue;
        }
        if sup < best_sup {
            best = Some((sup, x.clone(), f.clone()));
        }
        x = acc.next(&x, &f, theta);
    }
    let report = ConvergenceReport {
        iterations,
        final_sup_delta: last_sup,
        max_balance_residual: f64::NAN,
        e1_residuals: Vec::new(),
        damping_used: theta,
        tail_omega: (trusted < n_trunc).then_some(map.omega),
    };
    let Some(xc) = converged else {
        let lambda = map.extend(&x)?;
        let model = BalancedModel {
            beta,
            n_trunc,
            lambda,
            x_max,
            trusted_degree: trusted,
            solve_report: report.clone(),
        };
        return Err(Error::MaxIterExceeded {
            model: Box::new(model),
            report,
        });
    };
    let lambda = map.extend(&xc)?;
    let raw = BalancedModel {
        beta,
        n_trunc,
        lambda,
        x_max,
        trusted_degree: trusted,
        solve_report: report,
    };
    let mut model = finalize_normalization(&raw);
    model.solve_report.tail_omega = raw.solve_report.tail_omega;
    model.solve_report.max_balance_residual = max_balance_residual(&model);
    model.solve_report.e1_residuals = E1_SAMPLES
        .iter()
        .filter_map(|&s| check_e1(&model, s).ok().map(|c| (s, c.residual)))
        .collect();
    Ok(model)
}
