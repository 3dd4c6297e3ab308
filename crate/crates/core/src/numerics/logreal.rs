//! Signed reals carried as `(sign, ln|v|)`.
//!
//! Coefficients of the balanced series and the moment integrals span
//! thousands of decades, so everything that is multiplied or summed across
//! indices lives here instead of in raw `f64`.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogReal {
    sign: i8,
    logmag: f64,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal {
        sign: 0,
        logmag: f64::NEG_INFINITY,
    };
    pub const ONE: LogReal = LogReal {
        sign: 1,
        logmag: 0.0,
    };

    /// Builds a value from an explicit sign and log-magnitude. A sign of
    /// zero, or a log-magnitude of `-inf`, yields exact zero.
    pub fn new(sign: i8, logmag: f64) -> Self {
        if sign == 0 || logmag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogReal {
                sign: sign.signum(),
                logmag,
            }
        }
    }

    /// Positive value `exp(logmag)`.
    pub fn from_log(logmag: f64) -> Self {
        Self::new(1, logmag)
    }

    pub fn from_real(v: f64) -> Self {
        match v.partial_cmp(&0.0) {
            Some(Ordering::Greater) => LogReal {
                sign: 1,
                logmag: v.ln(),
            },
            Some(Ordering::Less) => LogReal {
                sign: -1,
                logmag: (-v).ln(),
            },
            _ => Self::ZERO,
        }
    }

    pub fn to_real(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.logmag.exp(),
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// `ln|v|`; `-inf` for zero.
    pub fn logmag(self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.logmag
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        Self::new(self.sign.abs(), self.logmag)
    }

    pub fn powi(self, n: i32) -> Self {
        if self.sign == 0 {
            return if n == 0 { Self::ONE } else { Self::ZERO };
        }
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        LogReal {
            sign,
            logmag: self.logmag * f64::from(n),
        }
    }

    pub fn is_finite(self) -> bool {
        self.sign == 0 || self.logmag.is_finite()
    }
}

impl Mul for LogReal {
    type Output = LogReal;
    fn mul(self, rhs: LogReal) -> LogReal {
        if self.sign == 0 || rhs.sign == 0 {
            return LogReal::ZERO;
        }
        LogReal {
            sign: self.sign * rhs.sign,
            logmag: self.logmag + rhs.logmag,
        }
    }
}

impl Div for LogReal {
    type Output = LogReal;
    fn div(self, rhs: LogReal) -> LogReal {
        assert!(rhs.sign != 0, "LogReal division by zero");
        if self.sign == 0 {
            return LogReal::ZERO;
        }
        LogReal {
            sign: self.sign * rhs.sign,
            logmag: self.logmag - rhs.logmag,
        }
    }
}

impl Neg for LogReal {
    type Output = LogReal;
    fn neg(self) -> LogReal {
        LogReal {
            sign: -self.sign,
            logmag: self.logmag,
        }
    }
}

impl Add for LogReal {
    type Output = LogReal;
    fn add(self, rhs: LogReal) -> LogReal {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.logmag >= rhs.logmag {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let r = (lo.logmag - hi.logmag).exp();
        if hi.sign == lo.sign {
            LogReal {
                sign: hi.sign,
                logmag: hi.logmag + r.ln_1p(),
            }
        } else if r == 1.0 {
            LogReal::ZERO
        } else {
            LogReal {
                sign: hi.sign,
                logmag: hi.logmag + (-r).ln_1p(),
            }
        }
    }
}

impl Sub for LogReal {
    type Output = LogReal;
    fn sub(self, rhs: LogReal) -> LogReal {
        self + (-rhs)
    }
}

/// `ln Σ exp(v_k)` over raw log-values, shifted by the running maximum.
/// Entries equal to `-inf` are exact zeros; the empty sum is `-inf`.
pub fn log_sum_exp_raw(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// Sum of non-negative terms. Negative entries violate the precondition and
/// are rejected in debug builds; use [`signed_log_sum_exp`] for mixed signs.
pub fn log_sum_exp(terms: &[LogReal]) -> LogReal {
    debug_assert!(terms.iter().all(|t| t.sign >= 0), "negative term in log_sum_exp");
    let max = terms
        .iter()
        .filter(|t| t.sign > 0)
        .map(|t| t.logmag)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LogReal::ZERO;
    }
    let s: f64 = terms
        .iter()
        .filter(|t| t.sign > 0)
        .map(|t| (t.logmag - max).exp())
        .sum();
    LogReal::from_log(max + s.ln())
}

/// Sum of terms of either sign; positive and negative parts are accumulated
/// separately and combined once at the end.
pub fn signed_log_sum_exp(terms: &[LogReal]) -> LogReal {
    let (pos, neg): (Vec<LogReal>, Vec<LogReal>) = terms
        .iter()
        .filter(|t| t.sign != 0)
        .partition(|t| t.sign > 0);
    let neg: Vec<LogReal> = neg.into_iter().map(|t| -t).collect();
    log_sum_exp(&pos) - log_sum_exp(&neg)
}
