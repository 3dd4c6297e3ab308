//! Central finite-difference stencils.

use crate::error::{Error, Result};

/// Default step when differentiating in the anchor value `a`.
pub const STEP_IN_A: f64 = 0.5;
/// Default step when differentiating in `t = ln x`.
pub const STEP_IN_T: f64 = 0.02;

/// `k`-th derivative at the stencil center from equally spaced samples
/// `g(x0 + j h)`, `j = -m..=m`, with `m = 2` (5 points, `k ≤ 2`) or `m = 3`
/// (7 points, `k ≤ 4`). Truncation error is O(h⁴), or O(h⁶) for `k ≤ 2`
/// on seven points.
pub fn central_diff(samples: &[f64], k: usize, h: f64) -> Result<f64> {
    let coeffs: &[f64] = match (samples.len(), k) {
        (5, 0) | (7, 0) => return Ok(samples[samples.len() / 2]),
        (5, 1) => &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
        (5, 2) => &[-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
        (7, 1) => &[-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
        (7, 2) => &[1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0],
        (7, 3) => &[1.0 / 8.0, -1.0, 13.0 / 8.0, 0.0, -13.0 / 8.0, 1.0, -1.0 / 8.0],
        (7, 4) => &[-1.0 / 6.0, 2.0, -13.0 / 2.0, 28.0 / 3.0, -13.0 / 2.0, 2.0, -1.0 / 6.0],
        (n, k) => {
            return Err(Error::invalid(format!(
                "no central stencil for derivative order {k} from {n} samples (use 5 points for k ≤ 2, 7 for k ≤ 4)"
            )))
        }
    };
    let s: f64 = coeffs.iter().zip(samples).map(|(c, v)| c * v).sum();
    Ok(s / h.powi(k as i32))
}

/// Samples `g` on the symmetric stencil and applies [`central_diff`],
/// picking 5 points for `k ≤ 2` and 7 otherwise.
pub fn derivative<F: FnMut(f64) -> f64>(mut g: F, x0: f64, k: usize, h: f64) -> Result<f64> {
    let m: i32 = if k <= 2 { 2 } else { 3 };
    let samples: Vec<f64> = (-m..=m).map(|j| g(x0 + j as f64 * h)).collect();
    central_diff(&samples, k, h)
}
