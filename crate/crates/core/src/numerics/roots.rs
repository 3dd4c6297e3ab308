//! Safeguarded root finding for monotone functions.

use crate::error::{Error, Result};

const MAX_STEPS: usize = 200;

/// Root of an increasing function on `[lo, hi]`.
///
/// Illinois-modified regula falsi with a bisection step whenever the
/// bracket fails to shrink by half over two iterations. Stops when the
/// residual divided by the local secant slope is below `tol`, or the bracket
/// itself is narrower than `tol`.
pub fn find_root_monotone<F: FnMut(f64) -> f64>(mut g: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::BracketInvalid { lo, hi, g_lo: f64::NAN, g_hi: f64::NAN });
    }
    let (mut a, mut b) = (lo, hi);
    let (mut ga, mut gb) = (g(a), g(b));
    if !(ga <= 0.0 && gb >= 0.0) {
        return Err(Error::BracketInvalid { lo, hi, g_lo: ga, g_hi: gb });
    }
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    let mut side = 0i8;
    let mut width_before = b - a;
    for step in 0..MAX_STEPS {
        let slope = (gb - ga) / (b - a);
        let mut x = b - gb / slope;
        if step % 2 == 1 {
            if b - a > 0.5 * width_before {
                x = 0.5 * (a + b);
            }
            width_before = b - a;
        }
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let gx = g(x);
        if gx == 0.0 || (gx.abs() / slope <= tol) || b - a <= tol {
            return Ok(x);
        }
        if gx < 0.0 {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

/// Root of an increasing function by Newton steps from `x0`, kept inside a
/// bracket that grows outward from `x0` until it straddles the root.
/// `g` returns the value and derivative.
pub fn newton_bracketed<F: FnMut(f64) -> (f64, f64)>(mut g: F, x0: f64, step0: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut x = x0;
    let mut span = step0.abs().max(1e-8);
    for _ in 0..MAX_STEPS {
        let (v, d) = g(x);
        if !v.is_finite() {
            return Err(Error::invalid(format!("non-finite function value at {x}")));
        }
        if v == 0.0 {
            return Ok(x);
        }
        if v < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let mut next = if d > 0.0 && d.is_finite() { x - v / d } else { f64::NAN };
        let inside = next > lo && next < hi;
        if !inside {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => {
                    span *= 2.0;
                    lo + span
                }
                (false, true) => {
                    span *= 2.0;
                    hi - span
                }
                (false, false) => unreachable!(),
            };
        }
        if (next - x).abs() <= tol * (1.0 + x.abs()) || hi - lo <= tol * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::invalid(format!("Newton iteration did not settle near {x}")))
}
