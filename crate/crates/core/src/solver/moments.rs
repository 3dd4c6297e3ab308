//! Coefficient moments `M_i = ∫₀^{x_max} x^i / f(x) dx` on a shared node set.
//!
//! Every `M_i` is an integral against the same `1/f`, so `ln f` is evaluated
//! once per node and reused for all indices. Nodes are Gauss–Legendre panels
//! in `t = ln x` whose width follows the local curvature `u₂(t)` of `ln f`,
//! which is also the curvature of every moment integrand.

use rayon::prelude::*;

use super::series;
use crate::numerics::gauss_legendre;

/// Lower end of the node set in `t`; the remainder down to `x = 0` is
/// added in closed form using `f ≈ f(e^{T_LOW})`.
const T_LOW: f64 = -40.0;
const MAX_PANEL: f64 = 0.25;
const PANEL_NODES: usize = 16;

#[derive(Debug, Clone)]
pub struct MomentGrid {
    t: Vec<f64>,
    /// `ln w_k + t_k − ln f(e^{t_k})`: the weight of `x^0/f · dx`.
    base: Vec<f64>,
    log_f_low: f64,
}

impl MomentGrid {
    pub fn new(lambda: &[f64], x_max: f64) -> Self {
        let t_hi = x_max.ln();
        let mut edges = vec![t_hi];
        let mut t = t_hi;
        while t > T_LOW {
            let c = series::cumulants(lambda, t);
            let h = (1.0 / c.var.max(1e-300).sqrt()).min(MAX_PANEL);
            t = (t - h).max(T_LOW);
            edges.push(t);
        }
        edges.reverse();
        let (gx, gw) = gauss_legendre(PANEL_NODES);
        let mut nodes = Vec::with_capacity(edges.len() * PANEL_NODES);
        let mut log_w = Vec::with_capacity(nodes.capacity());
        for pair in edges.windows(2) {
            let half = 0.5 * (pair[1] - pair[0]);
            let mid = 0.5 * (pair[1] + pair[0]);
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(mid + half * x);
                log_w.push((w * half).ln());
            }
        }
        let base = nodes
            .par_iter()
            .zip(log_w.par_iter())
            .map(|(&t, &lw)| lw + t - series::log_f(lambda, t))
            .collect();
        MomentGrid {
            t: nodes,
            base,
            log_f_low: series::log_f(lambda, T_LOW),
        }
    }

    /// `ln M_i` for a real exponent `i > −1`.
    pub fn log_moment(&self, i: f64) -> f64 {
        self.log_moment_and_mean(i).0
    }

    /// `ln M_i` together with the mean of `t` under `x^i/f dx`, which is
    /// the derivative of `ln M_i` in `i`.
    pub fn log_moment_and_mean(&self, i: f64) -> (f64, f64) {
        let max = self
            .t
            .iter()
            .zip(&self.base)
            .map(|(t, b)| b + i * t)
            .fold(f64::NEG_INFINITY, f64::max);
        let tail = (i + 1.0) * T_LOW - (i + 1.0).ln() - self.log_f_low;
        let mut s = (tail - max).exp();
        // Mean of t over the closed-form tail below T_LOW.
        let mut st = s * (T_LOW - 1.0 / (i + 1.0));
        for (t, b) in self.t.iter().zip(&self.base) {
            let e = (b + i * t - max).exp();
            s += e;
            st += e * t;
        }
        (max + s.ln(), st / s)
    }

    /// `ln M_i` for `i = 0..=top`.
    pub fn log_moments(&self, top: usize) -> Vec<f64> {
        (0..=top).into_par_iter().map(|i| self.log_moment(i as f64)).collect()
    }
}
