//! Base-2 iterated logarithm and exponential.

use crate::error::{Error, Result};

/// `log^(r) x`; fails if an intermediate argument is not positive.
pub fn iterated_log(r: u32, x: f64) -> Result<f64> {
    let mut v = x;
    for _ in 0..r {
        if v <= 0.0 || v.is_nan() {
            return Err(Error::UndefinedLog { value: v });
        }
        v = v.log2();
    }
    Ok(v)
}

/// `exp^(r) x` with `exp(x) = 2^x`. Overflows to infinity quickly.
pub fn iterated_exp(r: u32, x: f64) -> f64 {
    (0..r).fold(x, |v, _| v.exp2())
}

/// Smallest `r` with `log^(r) x < 2`.
pub fn log_star(x: f64) -> Result<u32> {
    if x <= 0.0 || x.is_nan() {
        return Err(Error::UndefinedLog { value: x });
    }
    let mut v = x;
    let mut r = 0;
    while v >= 2.0 {
        v = v.log2();
        r += 1;
    }
    Ok(r)
}
