//! Down-compression of subsets of `[t]^n`.
//!
//! `down_{i,a}` moves a point one step down along coordinate `i` when its
//! `i`-th coordinate equals `a` and the target is free. `down_i` packs every
//! `~_i` class (points differing only in coordinate `i`) into the lowest
//! values, and `down` applies `down_n` first and `down_1` last. All three
//! preserve cardinality; `down(K)` is an ideal.

mod conjecture;
mod perimeter;
mod pipeline;
mod table;

use std::collections::BTreeMap;

use serde::Serialize;

pub use conjecture::{
    feasible_conjecture_configs, verify_conjecture, ConjectureConfig, ConjectureReport, ConjectureVerdict,
    DEFAULT_SUBSET_BUDGET,
};
pub use perimeter::{
    ball_hits, perimeter, perimeter_exact, perimeter_sampled, perimeter_sum, verify_list_lemma, ListLemmaCheck,
    PerimeterValue, EXHAUSTIVE_LIMIT, MC_SAMPLES,
};
pub use pipeline::{isoperimetry_pipeline, PipelineOptions, PipelineReport};
pub use table::{log2_fixed, ConcaveTable, TableFamily, LOG_FRACTION_BITS};

use crate::error::{Error, Result};
use crate::grid::{digit, encode_unchecked, CoordSet, GridPoint, GridSet};

/// `down_{i,a}(K)`.
pub fn down_ia(set: &GridSet, i: usize, a: u32) -> Result<GridSet> {
    let params = *set.params();
    params.check_index(i)?;
    if a < 2 || a > params.t {
        return Err(Error::ShiftValue { a, t: params.t });
    }
    let stride = params.stride(i);
    let codes = set
        .codes()
        .iter()
        .map(|&c| {
            if digit(&params, c, i) == a && !set.contains_code(c - stride) {
                c - stride
            } else {
                c
            }
        })
        .collect();
    Ok(GridSet::from_codes_unchecked(params, codes))
}

/// `down_i(K)`: every `~_i` class of size `c` becomes the points of that
/// class with `i`-th coordinate in `[c]`.
pub fn down_i(set: &GridSet, i: usize) -> Result<GridSet> {
    let params = *set.params();
    params.check_index(i)?;
    let stride = params.stride(i);
    let mut classes: BTreeMap<u64, u64> = BTreeMap::new();
    for &c in set.codes() {
        let base = c - (digit(&params, c, i) as u64 - 1) * stride;
        *classes.entry(base).or_default() += 1;
    }
    let codes = classes
        .into_iter()
        .flat_map(|(base, count)| (0..count).map(move |v| base + v * stride))
        .collect();
    Ok(GridSet::from_codes_unchecked(params, codes))
}

/// `down_i(K)` computed by sweeping `down_{i,a}` for `a = 2..=t` until
/// nothing moves. Also returns the number of sweeps that changed the set.
pub fn down_i_via_ia(set: &GridSet, i: usize) -> Result<(GridSet, usize)> {
    let t = set.params().t;
    let mut cur = set.clone();
    let mut effective = 0;
    loop {
        let mut changed = false;
        for a in 2..=t {
            let next = down_ia(&cur, i, a)?;
            if next != cur {
                changed = true;
                effective += 1;
                cur = next;
            }
        }
        if !changed {
            return Ok((cur, effective));
        }
    }
}

/// `down_1(down_2(... down_n(K) ...))`.
pub fn down(set: &GridSet) -> GridSet {
    down_range(set, 1)
}

/// `down_from(down_{from+1}(... down_n(K) ...))`.
fn down_range(set: &GridSet, from: usize) -> GridSet {
    let n = set.params().n;
    let mut cur = set.clone();
    for i in (from..=n).rev() {
        cur = down_i(&cur, i).expect("index in range");
    }
    cur
}

pub fn is_i_ideal(set: &GridSet, i: usize) -> Result<bool> {
    let params = *set.params();
    params.check_index(i)?;
    let stride = params.stride(i);
    Ok(set
        .codes()
        .iter()
        .all(|&c| digit(&params, c, i) == 1 || set.contains_code(c - stride)))
}

pub fn is_ideal(set: &GridSet) -> bool {
    (1..=set.params().n).all(|i| is_i_ideal(set, i).expect("index in range"))
}

/// Point of `down(K)` with many large coordinates, and the box it spans.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxWitness {
    pub x: GridPoint,
    /// The chosen coordinates `I`, `|I| = ceil(n/5)`.
    pub coords: CoordSet,
    pub mu: f64,
    /// `(t/2) mu(K)^(5/(4n))` before rounding.
    pub k_raw: f64,
    /// `max(1, floor(k_raw))`, the side of the box on `I`.
    pub side: u32,
    /// Coordinates of `x` strictly greater than `k_raw`.
    pub qualifying: usize,
}

impl BoxWitness {
    /// Upper corner of `P`: `side` on `I`, 1 elsewhere.
    pub fn box_corner(&self) -> GridPoint {
        let n = self.x.dim();
        GridPoint::new((1..=n).map(|i| if self.coords.contains(i) { self.side } else { 1 }).collect())
    }

    pub fn box_set(&self, params: crate::grid::GridParams) -> Result<GridSet> {
        GridSet::product_box(params, self.box_corner().coords())
    }
}

/// Required number of large coordinates, `ceil(n/5)`.
pub fn witness_width(n: usize) -> usize {
    n.div_ceil(5)
}

/// `k = (t/2) mu^(5/(4n))`.
pub fn witness_threshold(t: u32, n: usize, mu: f64) -> f64 {
    (t as f64 / 2.0) * (mu.ln() * 5.0 / (4.0 * n as f64)).exp()
}

/// Lexicographically smallest `x` in `down(K)` with at least `ceil(n/5)`
/// coordinates strictly above `k`; `I` is the smallest such coordinates.
pub fn find_box_witness(set: &GridSet) -> Result<BoxWitness> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let params = *set.params();
    let n = params.n;
    let mu = set.measure();
    let k_raw = witness_threshold(params.t, n, mu);
    let need = witness_width(n);
    let compressed = down(set);
    for x in compressed.iter() {
        let large: Vec<usize> = (1..=n).filter(|&i| x.get(i) as f64 > k_raw).collect();
        if large.len() >= need {
            let coords = CoordSet::new(large[..need].to_vec(), n)?;
            return Ok(BoxWitness {
                x,
                coords,
                mu,
                k_raw,
                side: (k_raw.floor() as u32).max(1),
                qualifying: large.len(),
            });
        }
    }
    Err(Error::NoWitness { mu, k: k_raw })
}

/// A set `T` contained in `K` with `down(T) = [x_1] x ... x [x_n]`.
///
/// Follows the inductive construction over the dimension: pick `x_1`
/// distinct `~_1` classmates of `x` in `down_2(... down_n(K))` (smallest
/// first coordinates), recurse inside each chosen hyperplane, and take the
/// union. The result is checked against the postcondition before returning.
pub fn extract_t(set: &GridSet, x: &GridPoint) -> Result<GridSet> {
    let params = *set.params();
    params.validate(x)?;
    let mut codes = Vec::new();
    extract_rec(set, x, 1, &mut codes)?;
    let t_set = GridSet::from_codes_unchecked(params, codes);

    let expected = GridSet::product_box(params, x.coords())?;
    if !t_set.is_subset(set) || down(&t_set) != expected {
        return Err(Error::Invariant(format!("extract_t postcondition failed for x={x}")));
    }
    Ok(t_set)
}

fn extract_rec(set: &GridSet, y: &GridPoint, d: usize, out: &mut Vec<u64>) -> Result<()> {
    let params = *set.params();
    let compressed = down_range(set, d + 1);
    let stride = params.stride(d);
    let yd = y.get(d);
    let base = encode_unchecked(&params, y) - (yd as u64 - 1) * stride;
    let levels: Vec<u32> = (1..=params.t)
        .filter(|&l| compressed.contains_code(base + (l as u64 - 1) * stride))
        .take(yd as usize)
        .collect();
    if levels.len() < yd as usize {
        return Err(Error::NotInDownSet);
    }
    if d == params.n {
        out.extend(levels.iter().map(|&l| base + (l as u64 - 1) * stride));
        return Ok(());
    }
    for l in levels {
        let slice = GridSet::from_codes_unchecked(
            params,
            set.codes().iter().copied().filter(|&c| digit(&params, c, d) == l).collect(),
        );
        let mut target = y.clone();
        target.set(d, l);
        extract_rec(&slice, &target, d + 1, out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridParams;

    fn gs(t: u32, n: usize, pts: &[&[u32]]) -> GridSet {
        GridSet::from_coords(GridParams::new(t, n).unwrap(), pts).unwrap()
    }

    #[test]
    fn down_ia_examples() {
        let k = gs(2, 1, &[&[2]]);
        assert_eq!(down_ia(&k, 1, 2).unwrap(), gs(2, 1, &[&[1]]));
        let k = gs(2, 1, &[&[1], &[2]]);
        assert_eq!(down_ia(&k, 1, 2).unwrap(), k);
        let k = gs(3, 1, &[&[2]]);
        assert_eq!(down_ia(&k, 1, 3).unwrap(), k);
        assert!(matches!(down_ia(&k, 1, 1), Err(Error::ShiftValue { .. })));
        assert!(matches!(down_ia(&k, 1, 4), Err(Error::ShiftValue { .. })));
        assert!(matches!(down_ia(&k, 2, 2), Err(Error::CoordinateIndex { .. })));
    }

    #[test]
    fn down_i_examples() {
        let k = gs(3, 2, &[&[1, 1], &[1, 3], &[3, 1]]);
        assert_eq!(down_i(&k, 2).unwrap(), gs(3, 2, &[&[1, 1], &[1, 2], &[3, 1]]));
        let ideal = gs(3, 2, &[&[1, 1], &[2, 1], &[1, 2]]);
        assert_eq!(down_i(&ideal, 1).unwrap(), ideal);
        let empty = GridSet::empty(GridParams::new(3, 2).unwrap()).unwrap();
        assert!(down_i(&empty, 1).unwrap().is_empty());
    }

    #[test]
    fn down_examples() {
        let k = gs(3, 2, &[&[1, 1], &[1, 3], &[3, 1]]);
        assert_eq!(down(&k), gs(3, 2, &[&[1, 1], &[1, 2], &[2, 1]]));
        let square = GridSet::product_box(GridParams::new(3, 2).unwrap(), &[2, 2]).unwrap();
        assert_eq!(down(&square), square);
    }

    #[test]
    fn ideal_predicates() {
        assert!(is_ideal(&gs(3, 2, &[&[1, 1], &[2, 1], &[1, 2]])));
        assert!(!is_ideal(&gs(3, 2, &[&[2, 1]])));
        let g = GridParams::new(3, 2).unwrap();
        assert!(is_ideal(&GridSet::empty(g).unwrap()));
        assert!(is_ideal(&GridSet::full(g).unwrap()));
        let col = gs(3, 2, &[&[1, 2], &[2, 2]]);
        assert!(is_i_ideal(&col, 1).unwrap());
        assert!(!is_i_ideal(&col, 2).unwrap());
    }

    #[test]
    fn via_ia_on_ideal_does_nothing() {
        let ideal = gs(3, 2, &[&[1, 1], &[2, 1], &[1, 2]]);
        let (res, sweeps) = down_i_via_ia(&ideal, 2).unwrap();
        assert_eq!(res, ideal);
        assert_eq!(sweeps, 0);
    }

    #[test]
    fn witness_for_full_grid() {
        let g = GridParams::new(4, 5).unwrap();
        let full = GridSet::full(g).unwrap();
        let w = find_box_witness(&full).unwrap();
        assert_eq!(w.k_raw, 2.0);
        assert_eq!(w.side, 2);
        // lexicographically smallest point of [4]^5 with one coordinate > 2
        assert_eq!(w.x, GridPoint::new(vec![1, 1, 1, 1, 3]));
        assert_eq!(w.coords.indices(), &[5]);
        // the all-t corner qualifies in every coordinate
        let corner = GridPoint::new(vec![4; 5]);
        assert!(down(&full).contains(&corner));
        assert_eq!((1..=5).filter(|&i| corner.get(i) as f64 > w.k_raw).count(), 5);
    }

    #[test]
    fn witness_for_singleton() {
        let g = GridParams::new(4, 5).unwrap();
        let k = GridSet::from_coords(g, &[&[3, 1, 4, 2, 2]]).unwrap();
        let w = find_box_witness(&k).unwrap();
        assert!((w.k_raw - 2f64.powf(-1.5)).abs() < 1e-12);
        assert_eq!(w.qualifying, 5);
        assert_eq!(w.x, GridPoint::ones(5));
        assert_eq!(w.side, 1);
        assert!(matches!(
            find_box_witness(&GridSet::empty(g).unwrap()),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn extract_t_examples() {
        let g = GridParams::new(3, 2).unwrap();
        let k = gs(3, 2, &[&[1, 1], &[1, 2], &[2, 1], &[3, 3]]);
        let t = extract_t(&k, &GridPoint::new(vec![2, 1])).unwrap();
        assert!(t.is_subset(&k));
        assert_eq!(down(&t), gs(3, 2, &[&[1, 1], &[2, 1]]));
        let t = extract_t(&k, &GridPoint::new(vec![1, 2])).unwrap();
        assert_eq!(t, gs(3, 2, &[&[1, 1], &[1, 2]]));
        assert!(matches!(
            extract_t(&k, &GridPoint::new(vec![3, 3])),
            Err(Error::NotInDownSet)
        ));
        let ideal = GridSet::product_box(g, &[2, 3]).unwrap();
        let t = extract_t(&ideal, &GridPoint::new(vec![2, 2])).unwrap();
        assert_eq!(t, GridSet::product_box(g, &[2, 2]).unwrap());
    }
}
