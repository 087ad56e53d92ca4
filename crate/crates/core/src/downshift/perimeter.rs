//! Generalized perimeter `E_{x~mu}[f(|B_{I,M}(x) ∩ S|)]`.

use num_rational::Ratio;
use rand::Rng;
use serde::Serialize;

use super::{down, is_ideal, ConcaveTable};
use crate::error::{Error, Result};
use crate::grid::{match_on, uniform_point, CoordSet, GridPoint, GridSet};

/// Grids up to this many points are averaged exactly.
pub const EXHAUSTIVE_LIMIT: u128 = 1 << 20;

pub const MC_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PerimeterValue {
    Exact {
        #[serde(serialize_with = "ser_ratio")]
        value: Ratio<i128>,
    },
    Estimate {
        mean: f64,
        std_error: f64,
        samples: usize,
    },
}

impl PerimeterValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            PerimeterValue::Exact { value } => ratio_f64(value),
            PerimeterValue::Estimate { mean, .. } => *mean,
        }
    }
}

pub(crate) fn ratio_f64(r: &Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub(crate) fn ser_ratio<S: serde::Serializer>(r: &Ratio<i128>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

/// `|B_{I,M}(x) ∩ S|` by scanning `S`.
pub fn ball_hits(set: &GridSet, x: &GridPoint, coords: &CoordSet, threshold: usize) -> u64 {
    set.iter().filter(|s| match_on(x, s, coords) >= threshold).count() as u64
}

fn check_args(set: &GridSet, coords: &CoordSet, threshold: usize) -> Result<()> {
    if let Some(m) = coords.max() {
        set.params().check_index(m)?;
    }
    if threshold > coords.len() {
        return Err(Error::ThresholdTooLarge { threshold, len: coords.len() });
    }
    Ok(())
}

/// `sum_x f(|B_{I,M}(x) ∩ S|)` over the whole grid, in table units.
pub fn perimeter_sum(set: &GridSet, f: &ConcaveTable, coords: &CoordSet, threshold: usize) -> Result<i128> {
    check_args(set, coords, threshold)?;
    let params = set.params();
    let size = params.size().unwrap_or(u128::MAX);
    if size > EXHAUSTIVE_LIMIT {
        return Err(Error::ExhaustiveTooLarge { size, bound: EXHAUSTIVE_LIMIT });
    }
    let members: Vec<GridPoint> = set.iter().collect();
    let mut total: i128 = 0;
    for x in params.points()? {
        let hits = members.iter().filter(|s| match_on(&x, s, coords) >= threshold).count();
        total += f.eval_scaled(hits as u64);
    }
    Ok(total)
}

pub fn perimeter_exact(set: &GridSet, f: &ConcaveTable, coords: &CoordSet, threshold: usize) -> Result<Ratio<i128>> {
    let sum = perimeter_sum(set, f, coords, threshold)?;
    let points = set.params().size().expect("bounded by the exhaustive limit") as i128;
    Ok(Ratio::new(sum, f.scale() * points))
}

pub fn perimeter_sampled<R: Rng + ?Sized>(
    set: &GridSet,
    f: &ConcaveTable,
    coords: &CoordSet,
    threshold: usize,
    samples: usize,
    rng: &mut R,
) -> Result<PerimeterValue> {
    check_args(set, coords, threshold)?;
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let members: Vec<GridPoint> = set.iter().collect();
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let x = uniform_point(set.params(), rng);
        let hits = members.iter().filter(|s| match_on(&x, s, coords) >= threshold).count();
        let v = f.eval(hits as u64);
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(PerimeterValue::Estimate { mean, std_error: (var / n).sqrt(), samples })
}

/// Exact average when `t^n <= 2^20`, otherwise a Monte Carlo estimate over
/// [`MC_SAMPLES`] uniform points.
pub fn perimeter<R: Rng + ?Sized>(
    set: &GridSet,
    f: &ConcaveTable,
    coords: &CoordSet,
    threshold: usize,
    rng: &mut R,
) -> Result<PerimeterValue> {
    match set.params().size() {
        Some(size) if size <= EXHAUSTIVE_LIMIT => Ok(PerimeterValue::Exact {
            value: perimeter_exact(set, f, coords, threshold)?,
        }),
        _ => perimeter_sampled(set, f, coords, threshold, MC_SAMPLES, rng),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListLemmaCheck {
    /// Perimeter of `down(K)`.
    #[serde(serialize_with = "ser_ratio")]
    pub compressed: Ratio<i128>,
    /// Perimeter of `K`.
    #[serde(serialize_with = "ser_ratio")]
    pub original: Ratio<i128>,
    pub holds: bool,
    pub equal: bool,
    pub set_is_ideal: bool,
}

/// Checks `E[f(|B ∩ down(K)|)] <= E[f(|B ∩ K|)]` exactly.
pub fn verify_list_lemma(set: &GridSet, coords: &CoordSet, threshold: usize, f: &ConcaveTable) -> Result<ListLemmaCheck> {
    let compressed_set = down(set);
    let original = perimeter_exact(set, f, coords, threshold)?;
    let compressed = perimeter_exact(&compressed_set, f, coords, threshold)?;
    Ok(ListLemmaCheck {
        holds: compressed <= original,
        equal: compressed == original,
        set_is_ideal: is_ideal(set),
        compressed,
        original,
    })
}
