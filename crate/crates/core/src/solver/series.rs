//! Evaluation of `f(x) = Σ exp(i t − λ_i)` and its log-derivatives in
//! `t = ln x`.
//!
//! Infinite `λ_i` encode vanishing coefficients.

/// Terms this far below the largest one are dropped (e⁻⁴⁶ ≈ 1e-20).
const SKIP_BELOW: f64 = 46.0;

fn max_exponent(lambda: &[f64], t: f64) -> f64 {
    lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| i as f64 * t - l)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `ln f(e^t)`.
pub fn log_f(lambda: &[f64], t: f64) -> f64 {
    let m = max_exponent(lambda, t);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| i as f64 * t - l - m)
        .filter(|&e| e > -SKIP_BELOW)
        .map(f64::exp)
        .sum();
    m + s.ln()
}

/// `ln f(x)` for `x ≥ 0`.
pub fn log_f_at(lambda: &[f64], x: f64) -> f64 {
    if x == 0.0 {
        lambda.first().map_or(f64::NEG_INFINITY, |l| -l)
    } else {
        log_f(lambda, x.ln())
    }
}

/// Cumulants of the index distribution `w_i ∝ exp(i t − λ_i)`, which are the
/// successive `t`-derivatives of `ln f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesCumulants {
    pub log_f: f64,
    /// First derivative `x f'/f`.
    pub mean: f64,
    pub var: f64,
    /// Third central moment.
    pub k3: f64,
    /// Fourth cumulant `μ₄ − 3μ₂²`.
    pub k4: f64,
    /// Estimated share of mass lying past the last stored index, from a
    /// geometric extrapolation of the top two weights. Infinite when the
    /// weights are still growing at the top.
    pub truncated_mass: f64,
}

pub fn cumulants(lambda: &[f64], t: f64) -> SeriesCumulants {
    let m = max_exponent(lambda, t);
    let w: Vec<f64> = lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let e = i as f64 * t - l - m;
            if e > -SKIP_BELOW {
                e.exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    let mean = w.iter().enumerate().map(|(i, wi)| i as f64 * wi).sum::<f64>() / total;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for (i, wi) in w.iter().enumerate() {
        let d = i as f64 - mean;
        let d2 = d * d;
        m2 += wi * d2;
        m3 += wi * d2 * d;
        m4 += wi * d2 * d2;
    }
    m2 /= total;
    m3 /= total;
    m4 /= total;
    let n = lambda.len();
    let truncated_mass = if n < 2 {
        0.0
    } else {
        let top = lambda[n - 1];
        let below = lambda[n - 2];
        let log_top = (n - 1) as f64 * t - top - m;
        let log_ratio = t - (top - below);
        if log_top == f64::NEG_INFINITY {
            0.0
        } else if log_ratio >= 0.0 || log_ratio.is_nan() {
            f64::INFINITY
        } else {
            (log_top + log_ratio).exp() / (-log_ratio.exp_m1()) / total
        }
    };
    SeriesCumulants {
        log_f: m + total.ln(),
        mean,
        var: m2,
        k3: m3,
        k4: m4 - 3.0 * m2 * m2,
        truncated_mass,
    }
}

/// Share of the index mass at `x = e^t` sitting strictly above `index`.
pub fn mass_beyond(lambda: &[f64], t: f64, index: usize) -> f64 {
    let m = max_exponent(lambda, t);
    let mut total = 0.0;
    let mut upper = 0.0;
    for (i, &l) in lambda.iter().enumerate() {
        let v = (i as f64 * t - l - m).exp();
        total += v;
        if i > index {
            upper += v;
        }
    }
    upper / total
}
