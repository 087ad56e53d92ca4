//! Finite concave functions on the nonnegative integers.
//!
//! Values are stored as integers over a common denominator so that
//! perimeter sums and the verifier comparisons stay exact. The log table
//! uses a dyadic approximation with [`LOG_FRACTION_BITS`] fractional bits.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LOG_FRACTION_BITS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableFamily {
    /// `f(0) = 0`, `f(l) = 1` for `l > 0`.
    Counting,
    /// `f(0) = -1`, `f(l) = log2 l`.
    Log,
    /// `f(0) = -1`, `f(l) = 0` for `l > 0`.
    EmptyIndicator,
}

impl TableFamily {
    pub const ALL: [TableFamily; 3] = [TableFamily::Counting, TableFamily::Log, TableFamily::EmptyIndicator];

    /// Table covering arguments `0..=max_arg` exactly.
    pub fn build(self, max_arg: usize) -> ConcaveTable {
        match self {
            TableFamily::Counting => ConcaveTable::counting(max_arg),
            TableFamily::Log => ConcaveTable::log2_with_zero(max_arg),
            TableFamily::EmptyIndicator => ConcaveTable::empty_indicator(max_arg),
        }
    }
}

impl fmt::Display for TableFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableFamily::Counting => "counting",
            TableFamily::Log => "log",
            TableFamily::EmptyIndicator => "empty-indicator",
        })
    }
}

impl FromStr for TableFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counting" => Ok(TableFamily::Counting),
            "log" => Ok(TableFamily::Log),
            "empty-indicator" | "indicator" => Ok(TableFamily::EmptyIndicator),
            other => Err(Error::InvalidParameter(format!("unknown function family `{other}`"))),
        }
    }
}

/// `f(0), ..., f(L)` as numerators over `scale`, extended affinely past `L`
/// with the last slope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcaveTable {
    values: Vec<i128>,
    scale: i128,
}

impl ConcaveTable {
    /// Rejects tables whose increments are not nonincreasing.
    pub fn from_scaled(values: Vec<i128>, scale: i128) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyTable);
        }
        if scale <= 0 {
            return Err(Error::InvalidParameter(format!("table scale must be positive, got {scale}")));
        }
        for l in 1..values.len().saturating_sub(1) {
            let left = values[l] - values[l - 1];
            let right = values[l + 1] - values[l];
            if right > left {
                return Err(Error::NotConcave { at: l });
            }
        }
        Ok(Self { values, scale })
    }

    pub fn from_integers(values: &[i64]) -> Result<Self> {
        Self::from_scaled(values.iter().map(|&v| v as i128).collect(), 1)
    }

    pub fn counting(max_arg: usize) -> Self {
        let mut values = vec![1i128; max_arg.max(2) + 1];
        values[0] = 0;
        Self { values, scale: 1 }
    }

    pub fn empty_indicator(max_arg: usize) -> Self {
        let mut values = vec![0i128; max_arg.max(2) + 1];
        values[0] = -1;
        Self { values, scale: 1 }
    }

    /// `log2` with the `log 0 = -1` convention, exact up to the dyadic
    /// truncation of each value.
    pub fn log2_with_zero(max_arg: usize) -> Self {
        let scale = 1i128 << LOG_FRACTION_BITS;
        let mut values = Vec::with_capacity(max_arg.max(1) + 1);
        values.push(-scale);
        for l in 1..=max_arg.max(1) as u64 {
            values.push(log2_fixed(l, LOG_FRACTION_BITS) as i128);
        }
        Self::from_scaled(values, scale).expect("dyadic log table is concave for the supported range")
    }

    pub fn scale(&self) -> i128 {
        self.scale
    }

    pub fn max_arg(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[i128] {
        &self.values
    }

    /// Numerator of `f(l)` over [`Self::scale`].
    pub fn eval_scaled(&self, l: u64) -> i128 {
        let last = self.values.len() - 1;
        if (l as usize) <= last {
            return self.values[l as usize];
        }
        let slope = if last == 0 { 0 } else { self.values[last] - self.values[last - 1] };
        self.values[last] + slope * (l as i128 - last as i128)
    }

    pub fn eval(&self, l: u64) -> f64 {
        self.eval_scaled(l) as f64 / self.scale as f64
    }

    pub fn eval_ratio(&self, l: u64) -> Ratio<i128> {
        Ratio::new(self.eval_scaled(l), self.scale)
    }
}

/// `floor(log2(l) * 2^frac_bits)` by repeated squaring of the mantissa.
///
/// The mantissa is held with 62 fractional bits in a `u128`, so the result
/// can be off by one unit in the last place when a squaring truncates right
/// at a bit boundary.
pub fn log2_fixed(l: u64, frac_bits: u32) -> u64 {
    assert!(l > 0, "log2 of zero");
    const ONE: u32 = 62;
    let exp = 63 - l.leading_zeros();
    let mut y: u128 = ((l as u128) << ONE) >> exp;
    let mut frac: u64 = 0;
    for _ in 0..frac_bits {
        y = (y * y) >> ONE;
        frac <<= 1;
        if y >= 2u128 << ONE {
            y >>= 1;
            frac |= 1;
        }
    }
    ((exp as u64) << frac_bits) | frac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_concave() {
        assert!(matches!(
            ConcaveTable::from_integers(&[0, 1, 3]),
            Err(Error::NotConcave { at: 1 })
        ));
        assert!(ConcaveTable::from_integers(&[0, 2, 3, 3]).is_ok());
        assert!(matches!(ConcaveTable::from_integers(&[]), Err(Error::EmptyTable)));
    }

    #[test]
    fn families_are_concave_and_extend_flat() {
        for fam in TableFamily::ALL {
            let t = fam.build(64);
            assert!(ConcaveTable::from_scaled(t.values().to_vec(), t.scale()).is_ok());
        }
        let c = ConcaveTable::counting(1);
        assert_eq!(c.eval_scaled(0), 0);
        assert_eq!(c.eval_scaled(1), 1);
        assert_eq!(c.eval_scaled(1000), 1);
        let e = ConcaveTable::empty_indicator(0);
        assert_eq!(e.eval_scaled(0), -1);
        assert_eq!(e.eval_scaled(7), 0);
    }

    #[test]
    fn affine_tail_uses_last_slope() {
        let t = ConcaveTable::from_integers(&[0, 3, 5]).unwrap();
        assert_eq!(t.eval_scaled(4), 9);
    }

    #[test]
    fn log_table_values() {
        let t = ConcaveTable::log2_with_zero(1 << 12);
        assert_eq!(t.eval_ratio(0), Ratio::from_integer(-1));
        assert_eq!(t.eval_ratio(1), Ratio::from_integer(0));
        assert_eq!(t.eval_ratio(2), Ratio::from_integer(1));
        assert_eq!(t.eval_ratio(1024), Ratio::from_integer(10));
        for l in [3u64, 5, 7, 1000, 4095] {
            let err = (t.eval(l) - (l as f64).log2()).abs();
            assert!(err < 2f64.powi(-38), "l={l} err={err}");
        }
    }

    #[test]
    fn log2_fixed_exact_powers() {
        for e in 0..63 {
            assert_eq!(log2_fixed(1 << e, 40), (e as u64) << 40);
        }
    }

    #[test]
    fn family_parsing() {
        assert_eq!("counting".parse::<TableFamily>().unwrap(), TableFamily::Counting);
        assert_eq!("log".parse::<TableFamily>().unwrap(), TableFamily::Log);
        assert!("cubic".parse::<TableFamily>().is_err());
    }
}
