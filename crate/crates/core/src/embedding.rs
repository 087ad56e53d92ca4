//! Embedding a small exists-equal instance `u, v ∈ [t']^n'` into `[t]^n`.
//!
//! Each party repeats its input `m` times, pushes coordinate `q` through a
//! shared random map `[t'] -> [t]`, and places the result on the
//! coordinates of `I` chosen by a shared random injection. Everything else
//! is filled privately and uniformly, so `X` and `Y` are each uniform.
//! Alice then replaces `X` by `X'`, a uniform member of
//! `N_X = {z ∈ T : Match(z_I, X_I) >= M}`, or by a sentinel when `N_X` is
//! empty.
//!
//! `T` is a box: side `k` on `I`, value 1 elsewhere. Only the two values
//! `m_q(u_q)` and `m_q(v_q)` of each random map are ever drawn, which has
//! the same joint law as drawing the whole map.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{trial_seed, SharedRandomness};
use crate::error::{Error, Result};
use crate::grid::{match_on, CoordSet, GridParams, GridPoint, GridSet};
use crate::harness::stats::wald_ci95;

/// Preset shipped with the crate: `n = 2000`, `k = 1600`, `M = 20`, `R = 1`.
pub const DESK_PRESET_JSON: &str = include_str!("../presets/desk.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
struct PresetFile {
    n: usize,
    #[serde(rename = "M")]
    threshold: usize,
    #[serde(rename = "R")]
    r: usize,
    k: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EmbeddingParams {
    pub n: usize,
    pub t: u32,
    #[serde(rename = "M")]
    pub threshold: usize,
    #[serde(rename = "R")]
    pub r: usize,
    /// Box side `k`.
    pub k: u32,
    /// Repetitions `2n / (M R)`.
    pub m: usize,
    pub n_prime: usize,
    pub t_prime: u32,
    /// `|I| = n / 5`; `I` is the first `|I|` coordinates.
    pub i_size: usize,
}

fn exact_div(a: usize, b: usize, what: &str) -> Result<usize> {
    if b == 0 || !a.is_multiple_of(b) {
        return Err(Error::Embedding(format!("{what}: {a} is not divisible by {b}")));
    }
    Ok(a / b)
}

impl EmbeddingParams {
    pub fn new(n: usize, threshold: usize, r: usize, k: u32) -> Result<Self> {
        if n < 3 || threshold < 2 || r < 1 {
            return Err(Error::Embedding(format!("need n >= 3, M >= 2, R >= 1; got n={n}, M={threshold}, R={r}")));
        }
        let t = u32::try_from(4 * n).map_err(|_| Error::Embedding(format!("t = 4n overflows for n={n}")))?;
        if k < 1 || k > t {
            return Err(Error::Embedding(format!("box side {k} outside [1, {t}]")));
        }
        let i_size = exact_div(n, 5, "|I| = n/5")?;
        let n_prime = exact_div(threshold, 10, "n' = M/10")?;
        let m = exact_div(2 * n, threshold * r, "m = 2n/(MR)")?;
        let embedded = exact_div(i_size, r, "n/(5R)")?;
        if m * n_prime != embedded {
            return Err(Error::Embedding(format!("m n' = {} differs from n/(5R) = {embedded}", m * n_prime)));
        }
        if threshold > i_size {
            return Err(Error::Embedding(format!("M = {threshold} exceeds |I| = {i_size}")));
        }
        Ok(Self { n, t, threshold, r, k, m, n_prime, t_prime: 4 * n_prime as u32, i_size })
    }

    pub fn desk() -> Self {
        Self::from_json(DESK_PRESET_JSON).expect("bundled preset is valid")
    }

    /// Reads `{"n", "M", "R", "k"}` and validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PresetFile = serde_json::from_str(text).map_err(|e| Error::Embedding(format!("bad preset: {e}")))?;
        Self::new(raw.n, raw.threshold, raw.r, raw.k)
    }

    pub fn grid(&self) -> GridParams {
        GridParams { t: self.t, n: self.n }
    }

    pub fn small_grid(&self) -> GridParams {
        GridParams { t: self.t_prime, n: self.n_prime }
    }

    /// Length `n/(5R)` of the repeated vector.
    pub fn embedded_len(&self) -> usize {
        self.m * self.n_prime
    }

    /// Raw threshold `n k / (20 t)`.
    pub fn threshold_formula(&self) -> f64 {
        self.n as f64 * self.k as f64 / (20.0 * self.t as f64)
    }

    pub fn box_t(&self) -> BoxT {
        BoxT {
            params: self.grid(),
            coords: CoordSet::new((1..=self.i_size).collect(), self.n).expect("I within [n]"),
            side: self.k,
        }
    }
}

/// `T = ∏ P_i` with `P_i = [side]` for `i ∈ I` and `{1}` otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoxT {
    pub params: GridParams,
    pub coords: CoordSet,
    pub side: u32,
}

impl BoxT {
    pub fn new(params: GridParams, coords: CoordSet, side: u32) -> Result<Self> {
        if side < 1 || side > params.t {
            return Err(Error::Embedding(format!("box side {side} outside [1, {}]", params.t)));
        }
        if coords.max().is_some_and(|m| m > params.n) {
            return Err(Error::CoordinateIndex { index: coords.max().unwrap_or(0), n: params.n });
        }
        Ok(Self { params, coords, side })
    }

    pub fn contains(&self, z: &GridPoint) -> bool {
        z.dim() == self.params.n
            && (1..=self.params.n).all(|i| {
                let v = z.get(i);
                if self.coords.contains(i) {
                    (1..=self.side).contains(&v)
                } else {
                    v == 1
                }
            })
    }

    pub fn materialize(&self) -> Result<GridSet> {
        let sides: Vec<u32> = (1..=self.params.n).map(|i| if self.coords.contains(i) { self.side } else { 1 }).collect();
        GridSet::product_box(self.params, &sides)
    }

    /// The coordinates of `I` where `x` could be matched by a box point.
    fn low_positions(&self, x: &GridPoint) -> Vec<usize> {
        self.coords.indices().iter().copied().filter(|&i| x.get(i) <= self.side).collect()
    }

    /// `|N_x|` when it fits in `u128`.
    pub fn nx_size(&self, x: &GridPoint, threshold: usize) -> Option<u128> {
        let h = self.low_positions(x).len();
        let k = self.side as u128;
        let rest = k.checked_pow((self.coords.len() - h) as u32)?;
        let mut total: u128 = 0;
        for j in threshold..=h {
            let term = binom_u128(h, j)?.checked_mul((k - 1).checked_pow((h - j) as u32)?)?;
            total = total.checked_add(term.checked_mul(rest)?)?;
        }
        Some(total)
    }

    /// `h(x) = |{i ∈ I : x_i <= side}|`.
    pub fn h(&self, x: &GridPoint) -> usize {
        self.low_positions(x).len()
    }
}

fn binom_u128(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// A draw of `X'`: a member of `N_x`, or the out-of-band sentinel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Draw {
    Member(GridPoint),
    Sentinel,
}

impl Draw {
    /// Exists-equal against `y`. The sentinel is evaluated as the all-`t`
    /// point, which lies outside every box of side `< t`.
    pub fn exists_equal(&self, y: &GridPoint, t: u32) -> bool {
        match self {
            Draw::Member(z) => z.coords().iter().zip(y.coords()).any(|(a, b)| a == b),
            Draw::Sentinel => y.coords().contains(&t),
        }
    }
}

/// Uniform member of `N_x` for a box `T`, by the closed form: pick the
/// number `j` of matched low positions with weight `C(h,j) (k-1)^(h-j)`,
/// then which positions match, then the remaining values.
///
/// Weights are normalized in the log domain in `f64`; the relative error of
/// each weight is below `2^-40` for `|I|` up to several thousand.
pub fn sample_nx_box<R: Rng + ?Sized>(x: &GridPoint, tbox: &BoxT, threshold: usize, rng: &mut R) -> Draw {
    let low = tbox.low_positions(x);
    let h = low.len();
    if h < threshold {
        return Draw::Sentinel;
    }
    let k = tbox.side;
    let j = if k == 1 {
        h
    } else {
        let ln_km1 = ((k - 1) as f64).ln();
        let mut ln_binom = 0.0f64;
        let mut logs = Vec::with_capacity(h + 1);
        for j in 0..=h {
            if j > 0 {
                ln_binom += ((h - j + 1) as f64).ln() - (j as f64).ln();
            }
            logs.push(ln_binom + (h - j) as f64 * ln_km1);
        }
        let logs = &logs[threshold..];
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let mut target = rng.random::<f64>() * weights.iter().sum::<f64>();
        let mut pick = weights.len() - 1;
        for (idx, w) in weights.iter().enumerate() {
            if target < *w {
                pick = idx;
                break;
            }
            target -= w;
        }
        threshold + pick
    };
    let mut z = vec![1u32; tbox.params.n];
    let mut matched = vec![false; h];
    for idx in sample(rng, h, j) {
        matched[idx] = true;
    }
    for (idx, &i) in low.iter().enumerate() {
        let xi = x.get(i);
        z[i - 1] = if matched[idx] {
            xi
        } else {
            // uniform over [k] \ {x_i}
            let v = rng.random_range(1..k);
            if v >= xi {
                v + 1
            } else {
                v
            }
        };
    }
    for &i in tbox.coords.indices() {
        if x.get(i) > k {
            z[i - 1] = rng.random_range(1..=k);
        }
    }
    Draw::Member(GridPoint::new(z))
}

/// Uniform member of `N_x` for an explicit set `T`, by scanning it.
pub fn sample_nx_scan<R: Rng + ?Sized>(
    x: &GridPoint,
    set: &GridSet,
    coords: &CoordSet,
    threshold: usize,
    rng: &mut R,
) -> Draw {
    let members: Vec<GridPoint> = set.iter().filter(|z| match_on(x, z, coords) >= threshold).collect();
    if members.is_empty() {
        Draw::Sentinel
    } else {
        let idx = rng.random_range(0..members.len());
        Draw::Member(members[idx].clone())
    }
}

/// Builds `(X, Y)` from the small inputs and the shared streams.
pub fn build_xy(
    u: &GridPoint,
    v: &GridPoint,
    params: &EmbeddingParams,
    shared: &SharedRandomness,
) -> Result<(GridPoint, GridPoint)> {
    let small = params.small_grid();
    small.validate(u)?;
    small.validate(v)?;
    let t = params.t;
    let mut alice = shared.stream("embed/alice", 0);
    let mut bob = shared.stream("embed/bob", 0);
    let mut x: Vec<u32> = (0..params.n).map(|_| alice.random_range(1..=t)).collect();
    let mut y: Vec<u32> = (0..params.n).map(|_| bob.random_range(1..=t)).collect();
    let len = params.embedded_len();
    let mut perm = shared.stream("embed/perm", 0);
    let targets = sample(&mut perm, params.i_size, len);
    let mut maps = shared.stream("embed/maps", 0);
    for (q, pos) in targets.into_iter().enumerate() {
        let (uq, vq) = (u.coords()[q % params.n_prime], v.coords()[q % params.n_prime]);
        let a = maps.random_range(1..=t);
        let b = if uq == vq { a } else { maps.random_range(1..=t) };
        x[pos] = a;
        y[pos] = b;
    }
    Ok((GridPoint::new(x), GridPoint::new(y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LemmaCase {
    /// `Match(u, v) = 0`: `EE(X', Y) = 0` should be likely.
    Match0,
    /// `Match(u, v) = R`: `EE(X', Y) = 1` should be likely.
    MatchR,
}

impl std::str::FromStr for LemmaCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "match0" => Ok(LemmaCase::Match0),
            "matchR" | "matchr" => Ok(LemmaCase::MatchR),
            other => Err(Error::InvalidParameter(format!("unknown case {other:?}; use match0 or matchR"))),
        }
    }
}

impl std::fmt::Display for LemmaCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LemmaCase::Match0 => "match0",
            LemmaCase::MatchR => "matchR",
        })
    }
}

/// Small inputs with `Match(u, v)` equal to 0 or `R`.
pub fn sample_input_pair<R: Rng + ?Sized>(params: &EmbeddingParams, case: LemmaCase, rng: &mut R) -> (GridPoint, GridPoint) {
    let (tp, np) = (params.t_prime, params.n_prime);
    let u: Vec<u32> = (0..np).map(|_| rng.random_range(1..=tp)).collect();
    let agree = match case {
        LemmaCase::Match0 => 0,
        LemmaCase::MatchR => params.r.min(np),
    };
    let mut same = vec![false; np];
    for idx in sample(rng, np, agree) {
        same[idx] = true;
    }
    let v = u
        .iter()
        .zip(&same)
        .map(|(&ui, &s)| {
            if s {
                ui
            } else {
                let w = rng.random_range(1..tp);
                if w >= ui {
                    w + 1
                } else {
                    w
                }
            }
        })
        .collect();
    (GridPoint::new(u), GridPoint::new(v))
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    success: u64,
    sentinel: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally { success: self.success + o.success, sentinel: self.sentinel + o.sentinel }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaErrorReport {
    pub case: LemmaCase,
    pub trials: u64,
    pub successes: u64,
    /// `Pr[EE(X', Y) = 0]` for `match0`, `Pr[EE(X', Y) = 1]` for `matchR`.
    pub estimate: f64,
    pub ci95: f64,
    pub target_bound: f64,
    pub verdict: bool,
    pub sentinel_draws: u64,
    /// `X` used in place of `X'`.
    pub bypass: bool,
    /// `(1 - 1/t)^n` for `match0`.
    pub exact: Option<f64>,
    pub within_3_sigma: Option<bool>,
}

/// Monte Carlo estimate of the two embedding error probabilities.
pub fn estimate_lemma_error(
    params: &EmbeddingParams,
    case: LemmaCase,
    trials: u64,
    seed: u64,
    bypass: bool,
) -> Result<LemmaErrorReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let tbox = params.box_t();
    let forced = params.m * params.r;
    let tally = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<Tally> {
            let shared = SharedRandomness::new(trial_seed(seed, trial));
            let (u, v) = sample_input_pair(params, case, &mut shared.stream("embed/inputs", 0));
            let (x, y) = build_xy(&u, &v, params, &shared)?;
            if case == LemmaCase::MatchR && match_on(&x, &y, &tbox.coords) < forced {
                return Err(Error::Invariant(format!("trial {trial}: fewer than mR = {forced} forced matches")));
            }
            let draw = if bypass {
                Draw::Member(x)
            } else {
                sample_nx_box(&x, &tbox, params.threshold, &mut shared.stream("embed/nx", 0))
            };
            let ee = draw.exists_equal(&y, params.t);
            let success = match case {
                LemmaCase::Match0 => !ee,
                LemmaCase::MatchR => ee,
            };
            Ok(Tally { success: success as u64, sentinel: (draw == Draw::Sentinel) as u64 })
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    let estimate = tally.success as f64 / trials as f64;
    let ci95 = wald_ci95(tally.success, trials);
    let (target_bound, verdict) = match case {
        LemmaCase::Match0 => (0.77, estimate > 0.77 - ci95),
        LemmaCase::MatchR => (0.80, estimate >= 0.80 - ci95),
    };
    let (exact, within_3_sigma) = if case == LemmaCase::Match0 {
        let p = crate::channel::zero_round_pr_disjoint_f64(params.n as u64);
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        (Some(p), Some((estimate - p).abs() <= 3.0 * sigma))
    } else {
        (None, None)
    };
    Ok(LemmaErrorReport {
        case,
        trials,
        successes: tally.success,
        estimate,
        ci95,
        target_bound,
        verdict,
        sentinel_draws: tally.sentinel,
        bypass,
        exact,
        within_3_sigma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmptyRateReport {
    pub trials: u64,
    pub empty_events: u64,
    pub rate: f64,
    pub ci95: f64,
    /// `5^-M`.
    pub bound: f64,
    pub verdict: bool,
    /// `E[h] = |I| k / t`.
    pub mean_h: f64,
    pub observed_mean_h: f64,
}

/// Frequency of `N_X = ∅` over uniform `X`, i.e. of `h(X) < M`.
pub fn estimate_empty_rate(params: &EmbeddingParams, trials: u64, seed: u64) -> Result<EmptyRateReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let tbox = params.box_t();
    let (empty, h_sum) = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = SharedRandomness::new(trial_seed(seed, trial)).stream("embed/alice", 0);
            // only the coordinates of I matter for h
            let h = (0..params.i_size).filter(|_| rng.random_range(1..=params.t) <= tbox.side).count();
            ((h < params.threshold) as u64, h as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let rate = empty as f64 / trials as f64;
    let ci95 = wald_ci95(empty, trials);
    let bound = 5f64.powi(-(params.threshold as i32));
    Ok(EmptyRateReport {
        trials,
        empty_events: empty,
        rate,
        ci95,
        bound,
        verdict: rate <= bound + ci95,
        mean_h: params.i_size as f64 * params.k as f64 / params.t as f64,
        observed_mean_h: h_sum as f64 / trials as f64,
    })
}
