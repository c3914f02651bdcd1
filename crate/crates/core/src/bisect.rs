//! Sign-certified bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Root enclosed by a bracket whose endpoint signs were checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracketed {
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct BisectOptions {
    pub x_abs: f64,
    pub x_rel: f64,
    pub max_iter: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self {
            x_abs: 1e-10,
            x_rel: 0.0,
            max_iter: 200,
        }
    }
}

impl BisectOptions {
    /// Bisect until no representable midpoint is left.
    pub fn exhaustive() -> Self {
        Self {
            x_abs: 0.0,
            x_rel: 0.0,
            max_iter: 2000,
        }
    }
}

/// Finds a sign change of `f` on `[lo, hi]`. The endpoint values must have
/// opposite signs (a zero endpoint is returned as the root).
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, opts: BisectOptions) -> Result<Bracketed>
where
    F: FnMut(f64) -> f64,
{
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        return Err(Error::NumericalRange { lo, hi });
    }
    if f_lo == 0.0 {
        return Ok(Bracketed { root: lo, lo, hi: lo, f_lo, f_hi: f_lo, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Bracketed { root: hi, lo: hi, hi, f_lo: f_hi, f_hi, iterations: 0 });
    }
    let lo_positive = f_lo > 0.0;
    let mut it = 0;
    while it < opts.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if hi - lo <= opts.x_abs.max(opts.x_rel * mid.abs()) {
            break;
        }
        it += 1;
        let fm = f(mid);
        if fm.is_nan() {
            return Err(Error::Domain(format!("function is NaN at {mid:e}")));
        }
        if fm == 0.0 {
            return Ok(Bracketed { root: mid, lo: mid, hi: mid, f_lo: fm, f_hi: fm, iterations: it });
        }
        if (fm > 0.0) == lo_positive {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    // return the endpoint with the smaller residual
    let root = if f_lo.abs() <= f_hi.abs() { lo } else { hi };
    Ok(Bracketed { root, lo, hi, f_lo, f_hi, iterations: it })
}
