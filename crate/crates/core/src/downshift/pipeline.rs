//! From an arbitrary set `S` to the pair `(T, I)` used by the embedding:
//! compress, find a box witness, pull the box back to `T ⊆ S`, and measure
//! how often `N_x = {z in T : Match(x_I, z_I) >= M}` is empty and how large
//! it is on average.

use num_rational::Ratio;
use serde::Serialize;

use super::perimeter::{ratio_f64, ser_ratio};
use super::{extract_t, find_box_witness, perimeter_exact, BoxWitness, ConcaveTable};
use crate::error::{Error, Result};
use crate::grid::{GridParams, GridSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineOptions {
    /// Proceed with `M = 1` when `floor(n k / (20 t))` is zero instead of
    /// refusing. The closed-form bounds are then reported but not judged.
    pub clamp_threshold: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub params: GridParams,
    pub set_size: usize,
    pub witness: BoxWitness,
    /// `n k / (20 t)` before rounding.
    pub m_raw: f64,
    #[serde(rename = "M")]
    pub threshold: usize,
    pub clamped: bool,
    pub t_set: GridSet,
    /// `Pr_x[N_x = ∅]` over `T` and over the box `P = down(T)`.
    #[serde(serialize_with = "ser_ratio")]
    pub pr_empty: Ratio<i128>,
    #[serde(serialize_with = "ser_ratio")]
    pub pr_empty_box: Ratio<i128>,
    /// `E_x[log |N_x|]` with `log 0 = -1`, over `T` and over `P`.
    #[serde(serialize_with = "ser_ratio")]
    pub mean_log: Ratio<i128>,
    #[serde(serialize_with = "ser_ratio")]
    pub mean_log_box: Ratio<i128>,
    /// `T` does at least as well as its compressed box on both statistics.
    pub compression_chain_holds: bool,
    /// `5^-M`.
    pub bound_empty: f64,
    /// `(|I| - M) log k - n log k / 5^M` with the rounded box side `k`.
    pub bound_log: f64,
    /// Whether both closed-form bounds hold; `None` when `M` was clamped.
    pub theorem_bounds_hold: Option<bool>,
}

impl PipelineReport {
    pub fn pr_empty_f64(&self) -> f64 {
        ratio_f64(&self.pr_empty)
    }

    pub fn mean_log_f64(&self) -> f64 {
        ratio_f64(&self.mean_log)
    }
}

/// Runs down, box witness, `T` extraction and the exact `N_x` statistics.
/// Needs `t^n` within the exhaustive limit.
pub fn isoperimetry_pipeline(set: &GridSet, opts: PipelineOptions) -> Result<PipelineReport> {
    let params = *set.params();
    let witness = find_box_witness(set)?;
    let m_raw = params.n as f64 * witness.k_raw / (20.0 * params.t as f64);
    let floor_m = m_raw.floor() as usize;
    let (threshold, clamped) = match floor_m {
        0 if opts.clamp_threshold => (1, true),
        0 => return Err(Error::VacuousThreshold { raw: m_raw }),
        m => (m.min(witness.coords.len()), false),
    };

    let box_set = witness.box_set(params)?;
    let t_set = extract_t(set, &witness.box_corner())?;
    let coords = &witness.coords;

    let indicator = ConcaveTable::empty_indicator(t_set.len());
    let log = ConcaveTable::log2_with_zero(t_set.len());
    let pr_empty = -perimeter_exact(&t_set, &indicator, coords, threshold)?;
    let pr_empty_box = -perimeter_exact(&box_set, &indicator, coords, threshold)?;
    let mean_log = perimeter_exact(&t_set, &log, coords, threshold)?;
    let mean_log_box = perimeter_exact(&box_set, &log, coords, threshold)?;

    let m = threshold as f64;
    let log_k = (witness.side as f64).log2();
    let bound_empty = 5f64.powf(-m);
    let bound_log = (coords.len() as f64 - m) * log_k - params.n as f64 * log_k / 5f64.powf(m);
    let theorem_bounds_hold =
        (!clamped).then(|| ratio_f64(&pr_empty) <= bound_empty && ratio_f64(&mean_log) >= bound_log);

    Ok(PipelineReport {
        params,
        set_size: set.len(),
        m_raw,
        threshold,
        clamped,
        compression_chain_holds: pr_empty <= pr_empty_box && mean_log >= mean_log_box,
        witness,
        t_set,
        pr_empty,
        pr_empty_box,
        mean_log,
        mean_log_box,
        bound_empty,
        bound_log,
        theorem_bounds_hold,
    })
}
