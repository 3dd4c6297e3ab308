//! Comparison functionals of piecewise-quadratic potentials: `l_c`, the
//! ratio `d_m(c)`, its extremes `p`, `q`, and the derived `F`, `P`, `p̃`,
//! `q̃` on a grid of curvature ratios `m` near 1.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::quadrature::composite_gauss;
use crate::numerics::{golden_max, golden_min};

/// Search bracket for the knot position `c`.
pub const C_BRACKET: (f64, f64) = (0.0, 12.0);
pub const C_TOL: f64 = 1e-6;
const PANEL_WIDTH: f64 = 0.5;

/// Quadratic `y²/2` up to the knot `c`, then curvature `m` with matching
/// value and slope.
pub fn l_potential(y: f64, m: f64, c: f64) -> f64 {
    if y <= c {
        0.5 * y * y
    } else {
        0.5 * m * y * y + (1.0 - m) * c * y + 0.5 * m * c * c - 0.5 * c * c
    }
}

fn panels(len: f64) -> usize {
    ((len / PANEL_WIDTH).ceil() as usize).max(1)
}

/// `∫₀^∞ y² e^{−l_c} dy / (∫₀^∞ e^{−l_c} dy)³`.
pub fn d_ratio(m: f64, c: f64) -> f64 {
    let y_max = c + 40.0 / m.min(1.0).sqrt();
    let mut a = 0.0;
    let mut b = 0.0;
    for (lo, hi) in [(0.0, c), (c, y_max)] {
        if hi > lo {
            let n = panels(hi - lo);
            a += composite_gauss(|y| (-l_potential(y, m, c)).exp(), lo, hi, n);
            b += composite_gauss(|y| y * y * (-l_potential(y, m, c)).exp(), lo, hi, n);
        }
    }
    b / (a * a * a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    /// `None` when `m = 1` and `d_m` is constant in `c`.
    pub c_star: Option<f64>,
    pub d_star: f64,
}

pub fn extremize_d(m: f64, mode: Mode) -> Extremum {
    if m == 1.0 {
        return Extremum {
            c_star: None,
            d_star: 2.0 / PI,
        };
    }
    let (lo, hi) = C_BRACKET;
    let (c, d) = match mode {
        Mode::Max => golden_max(|c| d_ratio(m, c), lo, hi, C_TOL),
        Mode::Min => golden_min(|c| d_ratio(m, c), lo, hi, C_TOL),
    };
    Extremum { c_star: Some(c), d_star: d }
}

fn alpha(m: f64) -> f64 {
    1.0 / m.sqrt()
}

/// `p(m) = ¼ max_c d_{1/m}(c)` with its maximizer.
pub fn p_fn(m: f64) -> Extremum {
    let e = extremize_d(1.0 / m, Mode::Max);
    Extremum {
        d_star: 0.25 * e.d_star,
        ..e
    }
}

/// `q(m) = ¼ min_c d_m(c)` with its minimizer.
pub fn q_fn(m: f64) -> Extremum {
    let e = extremize_d(m, Mode::Min);
    Extremum {
        d_star: 0.25 * e.d_star,
        ..e
    }
}

pub fn big_p(m: f64) -> f64 {
    let a = alpha(m);
    4.0 * (a * a * a + 1.0) / (1.0 + a).powi(3)
}

pub fn p_tilde_from(p: f64, m: f64) -> f64 {
    p * big_p(m)
}

pub fn q_tilde_from(q: f64, m: f64) -> f64 {
    let a = alpha(m);
    q - 4.0 / (PI * PI) * (1.0 - a).powi(2) / (1.0 + a).powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slopes {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub big_f: Vec<f64>,
    pub big_p: Vec<f64>,
    pub p_tilde: Vec<f64>,
    pub q_tilde: Vec<f64>,
    /// Derivative of `(p̃/q̃)²`.
    pub tilde_ratio_sq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryCurve {
    pub m_grid: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub p_tilde: Vec<f64>,
    pub q_tilde: Vec<f64>,
    pub big_f: Vec<f64>,
    pub big_p: Vec<f64>,
    pub argmax_c: Vec<Option<f64>>,
    pub argmin_c: Vec<Option<f64>>,
    pub fd_slopes: Slopes,
}

/// Derivative estimates on a possibly uneven grid: central differences in
/// the interior, one-sided at the ends. Zero for a single point.
pub fn grid_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            let (i, j) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (y[j] - y[i]) / (x[j] - x[i])
        })
        .collect()
}

pub const M_RANGE: (f64, f64) = (1.0, 1.01);

pub fn curve(m_grid: &[f64]) -> Result<TheoryCurve> {
    if m_grid.is_empty() {
        return Err(Error::invalid("empty m-grid"));
    }
    if m_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("m-grid must be strictly increasing"));
    }
    if let Some(m) = m_grid.iter().find(|m| !(M_RANGE.0..=M_RANGE.1).contains(*m)) {
        return Err(Error::invalid(format!("m = {m} outside [{}, {}]", M_RANGE.0, M_RANGE.1)));
    }
    let pq: Vec<(Extremum, Extremum)> = m_grid.par_iter().map(|&m| (p_fn(m), q_fn(m))).collect();
    let p: Vec<f64> = pq.iter().map(|e| e.0.d_star).collect();
    let q: Vec<f64> = pq.iter().map(|e| e.1.d_star).collect();
    let big_p_v: Vec<f64> = m_grid.iter().map(|&m| big_p(m)).collect();
    let big_f: Vec<f64> = p.iter().zip(&q).map(|(p, q)| (p / q).powi(2)).collect();
    let p_tilde: Vec<f64> = p.iter().zip(m_grid).map(|(p, &m)| p_tilde_from(*p, m)).collect();
    let q_tilde: Vec<f64> = q.iter().zip(m_grid).map(|(q, &m)| q_tilde_from(*q, m)).collect();
    let ratio: Vec<f64> = p_tilde.iter().zip(&q_tilde).map(|(a, b)| (a / b).powi(2)).collect();
    let fd_slopes = Slopes {
        p: grid_slopes(m_grid, &p),
        q: grid_slopes(m_grid, &q),
        big_f: grid_slopes(m_grid, &big_f),
        big_p: grid_slopes(m_grid, &big_p_v),
        p_tilde: grid_slopes(m_grid, &p_tilde),
        q_tilde: grid_slopes(m_grid, &q_tilde),
        tilde_ratio_sq: grid_slopes(m_grid, &ratio),
    };
    Ok(TheoryCurve {
        m_grid: m_grid.to_vec(),
        p,
        q,
        p_tilde,
        q_tilde,
        big_f,
        big_p: big_p_v,
        argmax_c: pq.iter().map(|e| e.0.c_star).collect(),
        argmin_c: pq.iter().map(|e| e.1.c_star).collect(),
        fd_slopes,
    })
}

/// Default grid: `1, 1.0001` and steps of `0.001` up to `1.01`.
pub fn default_m_grid() -> Vec<f64> {
    let mut g = vec![1.0, 1.0001];
    g.extend((1..=10).map(|k| 1.0 + 0.001 * k as f64));
    g
}

/// Moment functionals of `e^{−g}` for a potential `g` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibleFunctionals {
    pub a: f64,
    pub b: f64,
    pub t_bar: f64,
    /// `B / A³`, invariant under dilation of `t`.
    pub d_tilde: f64,
}

pub fn admissible_functionals<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64) -> AdmissibleFunctionals {
    let n = panels(hi - lo) * 4;
    let a = composite_gauss(|t| (-g(t)).exp(), lo, hi, n);
    let t_bar = composite_gauss(|t| t * (-g(t)).exp(), lo, hi, n) / a;
    let b = composite_gauss(|t| (t - t_bar).powi(2) * (-g(t)).exp(), lo, hi, n);
    AdmissibleFunctionals {
        a,
        b,
        t_bar,
        d_tilde: b / (a * a * a),
    }
}
