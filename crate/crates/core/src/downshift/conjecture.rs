//! Exhaustive check that the box `[k]^n` minimizes the generalized
//! perimeter among all subsets of `[t]^n` of size `k^n`.
//!
//! Subsets are `u128` masks over the point codes, so grids are limited to
//! 128 points. The enumeration runs in colex rank order and is split into
//! rank ranges for the thread pool; the reducer keeps the lowest-rank
//! minimizer so the result does not depend on the number of threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TableFamily;
use crate::error::{Error, Result};
use crate::grid::{decode_unchecked, match_count, GridParams, GridSet};

pub const DEFAULT_SUBSET_BUDGET: u128 = 10_000_000;

const MAX_POINTS: u128 = 128;
const CHUNK: u128 = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjectureConfig {
    pub t: u32,
    pub n: usize,
    pub k: u32,
    #[serde(rename = "M")]
    pub threshold: usize,
    pub family: TableFamily,
    pub budget: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjectureVerdict {
    BoxMinimal,
    Counterexample,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureReport {
    pub params: ConjectureConfig,
    pub sets_checked: u128,
    pub verdict: ConjectureVerdict,
    /// Perimeter of the box, as a fraction string and a float.
    pub box_value: String,
    pub box_value_f64: f64,
    pub min_value: String,
    pub min_value_f64: f64,
    /// Number of subsets attaining the minimum.
    pub minimizers: u128,
    /// Lowest-rank minimizer, present when it beats the box.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmin_set: Option<GridSet>,
    /// Comparisons are exact integer sums, so no slack is needed.
    pub slack: f64,
}

fn pascal() -> Vec<Vec<u128>> {
    let size = MAX_POINTS as usize + 1;
    let mut c = vec![vec![0u128; size]; size];
    for row in 0..size {
        c[row][0] = 1;
        for col in 1..=row {
            c[row][col] = c[row - 1][col - 1].saturating_add(c[row - 1][col]);
        }
    }
    c
}

/// Mask of the `rank`-th `size`-subset in colex order.
fn unrank(mut rank: u128, size: usize, points: usize, binom: &[Vec<u128>]) -> u128 {
    let mut mask = 0u128;
    let mut upper = points;
    for j in (1..=size).rev() {
        let mut c = j - 1;
        while c + 1 < upper && binom[c + 1][j] <= rank {
            c += 1;
        }
        mask |= 1u128 << c;
        rank -= binom[c][j];
        upper = c;
    }
    mask
}

#[inline]
fn next_combination(x: u128) -> u128 {
    let low = x & x.wrapping_neg();
    let ripple = x.wrapping_add(low);
    (((ripple ^ x) >> 2) / low) | ripple
}

#[derive(Clone, Copy)]
struct Best {
    sum: i128,
    rank: u128,
    mask: u128,
    ties: u128,
}

impl Best {
    fn merge(self, other: Best) -> Best {
        use std::cmp::Ordering::*;
        match self.sum.cmp(&other.sum) {
            Less => self,
            Greater => other,
            Equal => Best {
                ties: self.ties + other.ties,
                ..if self.rank <= other.rank { self } else { other }
            },
        }
    }
}

pub fn verify_conjecture(cfg: &ConjectureConfig) -> Result<ConjectureReport> {
    let params = GridParams::new(cfg.t, cfg.n)?;
    if cfg.k == 0 || cfg.k > cfg.t {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= t, got k={}", cfg.k)));
    }
    if cfg.threshold == 0 || cfg.threshold >= cfg.n {
        return Err(Error::InvalidParameter(format!("need 1 <= M < n, got M={}", cfg.threshold)));
    }
    let points = params.size().filter(|&s| s <= MAX_POINTS).ok_or(Error::ExhaustiveTooLarge {
        size: params.size().unwrap_or(u128::MAX),
        bound: MAX_POINTS,
    })? as usize;
    let size = (cfg.k as u128).pow(cfg.n as u32) as usize;
    let binom = pascal();
    let count = binom[points][size];
    if count > cfg.budget || count == u128::MAX {
        return Err(Error::BudgetExceeded { count, budget: cfg.budget });
    }

    let grid: Vec<_> = (0..points as u64).map(|c| decode_unchecked(&params, c)).collect();
    let balls: Vec<u128> = grid
        .iter()
        .map(|x| {
            grid.iter().enumerate().fold(0u128, |acc, (j, s)| {
                if match_count(x, s).expect("same grid") >= cfg.threshold {
                    acc | 1 << j
                } else {
                    acc
                }
            })
        })
        .collect();
    let table = cfg.family.build(size);
    let f: Vec<i128> = (0..=size as u64).map(|l| table.eval_scaled(l)).collect();
    let eval = |mask: u128| -> i128 { balls.iter().map(|b| f[(b & mask).count_ones() as usize]).sum() };

    let box_mask = grid
        .iter()
        .enumerate()
        .filter(|(_, x)| x.coords().iter().all(|&c| c <= cfg.k))
        .fold(0u128, |acc, (j, _)| acc | 1 << j);
    let box_sum = eval(box_mask);

    let chunks = count.div_ceil(CHUNK);
    let best = (0..chunks as u64)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk as u128 * CHUNK;
            let end = (start + CHUNK).min(count);
            let mut mask = unrank(start, size, points, &binom);
            let mut best = Best { sum: eval(mask), rank: start, mask, ties: 1 };
            for rank in start + 1..end {
                mask = next_combination(mask);
                let sum = eval(mask);
                best = best.merge(Best { sum, rank, mask, ties: 1 });
            }
            best
        })
        .reduce_with(Best::merge)
        .expect("at least one subset");

    let denom = table.scale() * points as i128;
    let as_str = |s: i128| {
        let r = num_rational::Ratio::new(s, denom);
        format!("{}/{}", r.numer(), r.denom())
    };
    let as_f64 = |s: i128| s as f64 / denom as f64;
    let verdict = if best.sum < box_sum {
        ConjectureVerdict::Counterexample
    } else {
        ConjectureVerdict::BoxMinimal
    };
    let argmin_set = (verdict == ConjectureVerdict::Counterexample).then(|| {
        GridSet::from_codes_unchecked(params, (0..points as u64).filter(|&j| best.mask >> j & 1 == 1).collect())
    });
    Ok(ConjectureReport {
        params: *cfg,
        sets_checked: count,
        verdict,
        box_value: as_str(box_sum),
        box_value_f64: as_f64(box_sum),
        min_value: as_str(best.sum),
        min_value_f64: as_f64(best.sum),
        minimizers: best.ties,
        argmin_set,
        slack: 0.0,
    })
}

/// Every `(t, n, k, M)` with `t^n <= 128`, `1 <= k < t`, `1 <= M < n` and
/// at most `budget` subsets of size `k^n`.
pub fn feasible_conjecture_configs(budget: u128) -> Vec<(u32, usize, u32, usize)> {
    let binom = pascal();
    let mut out = Vec::new();
    for t in 2u32..=MAX_POINTS as u32 {
        let mut n = 2usize;
        while (t as u128).pow(n as u32) <= MAX_POINTS {
            let points = (t as u128).pow(n as u32) as usize;
            for k in 1..t {
                let size = (k as u128).pow(n as u32) as usize;
                if binom[points][size] <= budget {
                    out.extend((1..n).map(|m| (t, n, k, m)));
                }
            }
            n += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::downshift::{perimeter_exact, ConcaveTable};
    use crate::grid::CoordSet;

    fn cfg(t: u32, n: usize, k: u32, m: usize, family: TableFamily) -> ConjectureConfig {
        ConjectureConfig { t, n, k, threshold: m, family, budget: DEFAULT_SUBSET_BUDGET }
    }

    #[test]
    fn unrank_matches_gosper_order() {
        let binom = pascal();
        let mut mask = unrank(0, 3, 7, &binom);
        assert_eq!(mask, 0b111);
        for rank in 1..binom[7][3] {
            mask = next_combination(mask);
            assert_eq!(unrank(rank, 3, 7, &binom), mask, "rank {rank}");
        }
        assert_eq!(mask, 0b111_0000);
    }

    #[test]
    fn singletons_tie() {
        let r = verify_conjecture(&cfg(2, 2, 1, 1, TableFamily::Counting)).unwrap();
        assert_eq!(r.sets_checked, 4);
        assert_eq!(r.verdict, ConjectureVerdict::BoxMinimal);
        assert_eq!(r.minimizers, 4);
    }

    #[test]
    fn three_by_three_counting_box_minimal() {
        let r = verify_conjecture(&cfg(3, 2, 2, 1, TableFamily::Counting)).unwrap();
        assert_eq!(r.sets_checked, 126);
        assert_eq!(r.verdict, ConjectureVerdict::BoxMinimal);
        // box misses only (3,3): value 8/9
        assert!((r.box_value_f64 - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn three_by_three_log_has_counterexample() {
        let r = verify_conjecture(&cfg(3, 2, 2, 1, TableFamily::Log)).unwrap();
        assert_eq!(r.sets_checked, 126);
        assert_eq!(r.verdict, ConjectureVerdict::Counterexample);
        // Independent oracle: direct summation over the nine centers.
        let f = |l: usize| if l == 0 { -1.0 } else { (l as f64).log2() };
        let value = |s: &GridSet| -> f64 {
            let p = *s.params();
            p.points()
                .unwrap()
                .map(|x| f(s.iter().filter(|y| match_count(&x, y).unwrap() >= 1).count()))
                .sum::<f64>()
                / 9.0
        };
        let p = GridParams::new(3, 2).unwrap();
        let square = GridSet::product_box(p, &[2, 2]).unwrap();
        assert!((value(&square) - r.box_value_f64).abs() < 1e-9);
        let argmin = r.argmin_set.as_ref().expect("counterexample set reported");
        assert_eq!(argmin.len(), 4);
        assert!((value(argmin) - r.min_value_f64).abs() < 1e-9);
        assert!(r.min_value_f64 < r.box_value_f64 - 1e-3);
    }

    #[test]
    fn full_grid_is_forced() {
        for m in 1..=2 {
            let r = verify_conjecture(&cfg(2, 3, 2, m, TableFamily::Log)).unwrap();
            assert_eq!(r.sets_checked, 1);
            assert_eq!(r.min_value, r.box_value);
        }
    }

    #[test]
    fn box_value_agrees_with_perimeter() {
        let c = cfg(3, 2, 2, 1, TableFamily::Log);
        let r = verify_conjecture(&c).unwrap();
        let params = GridParams::new(3, 2).unwrap();
        let b = GridSet::product_box(params, &[2, 2]).unwrap();
        let exact = perimeter_exact(&b, &ConcaveTable::log2_with_zero(4), &CoordSet::full(2), 1).unwrap();
        assert_eq!(r.box_value, format!("{}/{}", exact.numer(), exact.denom()));
    }

    #[test]
    fn refusals() {
        let mut c = cfg(4, 3, 2, 1, TableFamily::Counting);
        assert!(matches!(verify_conjecture(&c), Err(Error::BudgetExceeded { .. })));
        c.budget = u128::MAX - 1;
        c.t = 12;
        assert!(matches!(verify_conjecture(&c), Err(Error::ExhaustiveTooLarge { .. })));
        assert!(verify_conjecture(&cfg(3, 2, 2, 2, TableFamily::Counting)).is_err());
        assert!(verify_conjecture(&cfg(3, 2, 4, 1, TableFamily::Counting)).is_err());
    }

    #[test]
    fn feasible_list_contains_reference_config() {
        let list = feasible_conjecture_configs(DEFAULT_SUBSET_BUDGET);
        assert!(list.contains(&(3, 2, 2, 1)));
        assert!(list.contains(&(3, 3, 2, 2)));
        assert!(!list.contains(&(4, 3, 2, 1)));
    }
}
