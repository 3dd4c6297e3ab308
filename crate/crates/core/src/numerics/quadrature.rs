//! Windowed Gauss–Legendre quadrature for Laplace-type integrands given in
//! log form.
//!
//! The core window around the concentration point is covered by composite
//! 16-point panels; outside it, segments are appended on each side with
//! geometrically growing width until a segment's share of the running total
//! drops below the requested tolerance. Segment width is capped so that the
//! log-integrand moves by at most [`MAX_LOG_DROP`] across one segment,
//! which keeps a single 16-point rule accurate even for slowly decaying tails.

use std::sync::OnceLock;

use super::logreal::{signed_log_sum_exp, LogReal};
use crate::error::{Error, Result};

const PANEL_NODES: usize = 16;
const MAX_LOG_DROP: f64 = 8.0;
/// Core panels span at most this share of the half-width (two local
/// standard deviations for a Laplace window).
const MAX_PANEL_SHARE: f64 = 1.0 / 6.0;

/// Window description for [`integrate_logspace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Concentration point in the integration variable.
    pub center: f64,
    pub half_width: f64,
    /// Minimum number of nodes in the core window; rounded up to a multiple
    /// of 16.
    pub core_nodes: usize,
    /// Maximum number of widening segments per side.
    pub tail_segments: usize,
    /// Relative tolerance for the tails, i.e. absolute tolerance on the log
    /// of the result.
    pub abs_log_tol: f64,
    pub lower: f64,
    pub upper: f64,
}

impl QuadratureSpec {
    pub fn new(center: f64, half_width: f64) -> Self {
        QuadratureSpec {
            center,
            half_width,
            core_nodes: 64,
            tail_segments: 40,
            abs_log_tol: 1e-15,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    /// Default window at a stationary point with the given curvature
    /// (minus the second derivative of the log-integrand): twelve local
    /// standard deviations each side.
    pub fn laplace(center: f64, curvature: f64) -> Self {
        let hw = if curvature.is_finite() && curvature > 0.0 {
            12.0 / curvature.sqrt()
        } else {
            1.0
        };
        Self::new(center, hw)
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_core_nodes(mut self, n: usize) -> Self {
        self.core_nodes = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::invalid(format!("half_width must be positive, got {}", self.half_width)));
        }
        if self.core_nodes < PANEL_NODES {
            return Err(Error::invalid(format!("core_nodes must be ≥ 16, got {}", self.core_nodes)));
        }
        if !self.center.is_finite() {
            return Err(Error::invalid("quadrature center is not finite"));
        }
        if !(self.lower < self.upper) {
            return Err(Error::invalid(format!("empty range [{}, {}]", self.lower, self.upper)));
        }
        if self.tail_segments == 0 {
            return Err(Error::invalid("tail_segments must be positive"));
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_NODES))
}

/// Plain composite 16-point Gauss–Legendre over `[a, b]` with `panels`
/// equal panels, for smooth integrands that need no log-domain treatment.
pub fn composite_gauss<F: FnMut(f64) -> f64>(mut g: F, a: f64, b: f64, panels: usize) -> f64 {
    let (xs, ws) = panel_rule();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for (x, w) in xs.iter().zip(ws) {
            s += w * g(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// One quadrature node: abscissa and `w_k · g(t_k)` in log form.
#[derive(Debug, Clone, Copy)]
pub struct WeightedNode {
    pub t: f64,
    pub value: LogReal,
}

fn push_panel<F: FnMut(f64) -> LogReal>(g: &mut F, a: f64, b: f64, out: &mut Vec<WeightedNode>) {
    let (xs, ws) = panel_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let log_half = half.ln();
    for (x, w) in xs.iter().zip(ws) {
        let t = mid + half * x;
        let v = g(t);
        out.push(WeightedNode {
            t,
            value: v * LogReal::from_log(w.ln() + log_half),
        });
    }
}

fn log_total(nodes: &[WeightedNode]) -> f64 {
    let vals: Vec<LogReal> = nodes.iter().map(|n| n.value).collect();
    signed_log_sum_exp(&vals).abs().logmag()
}

fn extend_tail<F: FnMut(f64) -> LogReal>(
    g: &mut F,
    spec: &QuadratureSpec,
    start: f64,
    first_width: f64,
    direction: f64,
    nodes: &mut Vec<WeightedNode>,
) -> Result<()> {
    let limit = if direction > 0.0 { spec.upper } else { spec.lower };
    let log_tol = spec.abs_log_tol.ln();
    let mut edge = start;
    let mut width = first_width;
    let mut g_edge = g(edge).logmag();
    let mut total = log_total(nodes);
    for _ in 0..spec.tail_segments {
        if (limit - edge) * direction <= 0.0 {
            return Ok(());
        }
        let mut far = edge + direction * width;
        if (far - limit) * direction > 0.0 {
            far = limit;
        }
        let mut seg = Vec::with_capacity(PANEL_NODES);
        let (a, b) = if direction > 0.0 { (edge, far) } else { (far, edge) };
        push_panel(g, a, b, &mut seg);
        let seg_log = log_total(&seg);
        nodes.extend(seg);
        total = if seg_log > total {
            seg_log + (total - seg_log).exp().ln_1p()
        } else {
            total + (seg_log - total).exp().ln_1p()
        };
        if far == limit {
            return Ok(());
        }
        let g_far = g(far).logmag();
        let decaying = g_far <= g_edge;
        if decaying && (seg_log - total < log_tol || g_far == f64::NEG_INFINITY) {
            return Ok(());
        }
        let drop_rate = (g_edge - g_far) / (far - edge).abs();
        width *= 2.0;
        if drop_rate > 0.0 && drop_rate.is_finite() {
            width = width.min(MAX_LOG_DROP / drop_rate);
        }
        edge = far;
        g_edge = g_far;
    }
    Err(Error::NonConvergentTail {
        segments: spec.tail_segments,
        side: if direction > 0.0 { "right" } else { "left" },
    })
}

/// Quadrature nodes covering `[lower, upper]` for the integrand whose log
/// form is `g`, following the window in `spec`.
pub fn quadrature_nodes<F: FnMut(f64) -> LogReal>(mut g: F, spec: &QuadratureSpec) -> Result<Vec<WeightedNode>> {
    spec.validate()?;
    let center = spec.center.clamp(spec.lower, spec.upper);
    let lo = (center - spec.half_width).max(spec.lower);
    let hi = (center + spec.half_width).min(spec.upper);
    let panels = spec.core_nodes.div_ceil(PANEL_NODES);
    let mut nodes = Vec::with_capacity(panels * PANEL_NODES + 8 * PANEL_NODES);
    let panel_width = (2.0 * spec.half_width / panels as f64).min(MAX_PANEL_SHARE * spec.half_width);
    if hi > lo {
        let count = (((hi - lo) / panel_width).ceil() as usize).max(1);
        let h = (hi - lo) / count as f64;
        for p in 0..count {
            let a = lo + h * p as f64;
            let b = if p + 1 == count { hi } else { a + h };
            push_panel(&mut g, a, b, &mut nodes);
        }
    }
    extend_tail(&mut g, spec, hi, panel_width, 1.0, &mut nodes)?;
    extend_tail(&mut g, spec, lo, panel_width, -1.0, &mut nodes)?;
    Ok(nodes)
}

/// `∫ exp(g(t)) dt` over `[spec.lower, spec.upper]` (default the whole
/// line), returned in log form.
pub fn integrate_logspace<F: FnMut(f64) -> LogReal>(g: F, spec: &QuadratureSpec) -> Result<LogReal> {
    let nodes = quadrature_nodes(g, spec)?;
    let vals: Vec<LogReal> = nodes.iter().map(|n| n.value).collect();
    Ok(signed_log_sum_exp(&vals))
}

/// Normalized weights of a node set: the density `w_k g(t_k) / Σ` together
/// with the log of the normalizer. Nodes must carry non-negative values.
pub fn normalized_weights(nodes: &[WeightedNode]) -> (Vec<f64>, f64) {
    let max = nodes
        .iter()
        .map(|n| n.value.logmag())
        .fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = nodes.iter().map(|n| (n.value.logmag() - max).exp()).collect();
    let s: f64 = raw.iter().sum();
    (raw.iter().map(|r| r / s).collect(), max + s.ln())
}
