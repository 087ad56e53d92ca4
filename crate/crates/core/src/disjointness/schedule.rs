//! Parameter schedule of the r-round protocol.
//!
//! With `u = (c+1) log^(r) k`, round `i` uses inclusion probability
//! `p_i = 1/exp^(i) u` and `l_i` candidate sets, where `l_1 = k 2^(ku)` and
//! `l_i = k 2^(k/2^(i-4))` for `i >= 2`. The analysis bounds the current set
//! sizes by `k_0 = k_1 = k`, `k_i = k / (2^(i-4) exp^(i-1) u)` and
//! `k_(r+1) = 0`. When some `k_j` drops below `4 sqrt k`, round `j` switches
//! to `p' = 2^(-2 sqrt k)`, `l' = k 2^(8k)` and the protocol ends there.
//!
//! Probabilities and set counts are far outside `f64` range, so both are
//! kept as base-2 logarithms.

use serde::Serialize;

use super::iterlog::{iterated_exp, iterated_log, log_star};
use crate::error::{Error, Result};

/// One round: inclusion probability `p` and number of candidate sets `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundParams {
    pub log2_p: f64,
    pub log2_l: f64,
    /// `l` itself when it fits in 63 bits.
    pub l_exact: Option<u64>,
}

impl RoundParams {
    /// Small-scale parameters with an explicit `l`.
    pub fn new(p: f64, l: u64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
        }
        if l == 0 {
            return Err(Error::InvalidParameter("l must be at least 1".into()));
        }
        Ok(Self { log2_p: p.log2(), log2_l: (l as f64).log2(), l_exact: Some(l) })
    }

    /// `l = floor(2^log2_l)`.
    pub fn from_logs(log2_p: f64, log2_l: f64) -> Self {
        let l_exact = (log2_l < 63.0).then(|| log2_l.exp2().floor() as u64);
        Self { log2_p, log2_l, l_exact }
    }

    pub fn validate(&self) -> Result<()> {
        if self.log2_p.is_nan() || self.log2_p >= 0.0 || self.log2_p.is_infinite() {
            return Err(Error::InvalidParameter(format!("degenerate p = 2^{}", self.log2_p)));
        }
        if self.l_exact == Some(0) || self.log2_l.is_nan() || self.log2_l < 0.0 {
            return Err(Error::InvalidParameter("l must be at least 1".into()));
        }
        Ok(())
    }

    /// Message width `ceil(log2(l + 1))`, i.e. the bit length of `l`.
    /// Index 0 is the error signal.
    pub fn bits(&self) -> u64 {
        match self.l_exact {
            Some(l) => (u64::BITS - l.leading_zeros()) as u64,
            None => self.log2_l.floor() as u64 + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Adjustment {
    /// 1-based index of the adjusted (and final) round.
    pub round: u32,
    /// `k'_j = 4 sqrt k`.
    pub kbound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub k: usize,
    pub r: u32,
    pub c: f64,
    pub u: f64,
    /// Rounds actually played; shorter than `r` when adjusted.
    pub rounds: Vec<RoundParams>,
    /// `k_0, ..., k_(r+1)` as given by the unadjusted formulas.
    pub kbounds: Vec<f64>,
    pub adjusted: Option<Adjustment>,
}

pub fn compute_schedule(k: usize, r: u32, c: f64) -> Result<Schedule> {
    if k < 4 {
        return Err(Error::InvalidParameter(format!("k must be at least 4, got {k}")));
    }
    if c.is_nan() || c <= 1.0 || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c must exceed 1, got {c}")));
    }
    let kf = k as f64;
    let max = log_star(kf)?;
    if r == 0 || r > max {
        return Err(Error::TooManyRounds { r, max });
    }
    let u = (c + 1.0) * iterated_log(r, kf)?;
    let log2_k = kf.log2();

    let mut rounds: Vec<RoundParams> = (1..=r)
        .map(|i| {
            let log2_p = -iterated_exp(i - 1, u);
            let log2_l = if i == 1 {
                log2_k + kf * u
            } else {
                log2_k + kf * 2f64.powi(4 - i as i32)
            };
            RoundParams::from_logs(log2_p, log2_l)
        })
        .collect();

    let mut kbounds = vec![kf, kf];
    for i in 2..=r {
        let denom_log2 = (i as f64 - 4.0) + iterated_exp(i - 2, u);
        kbounds.push((log2_k - denom_log2).exp2());
    }
    kbounds.push(0.0);

    let cutoff = 4.0 * kf.sqrt();
    let adjusted = (1..=r).find(|&i| kbounds[i as usize] < cutoff).map(|j| {
        rounds.truncate(j as usize);
        rounds[j as usize - 1] = RoundParams::from_logs(-2.0 * kf.sqrt(), log2_k + 8.0 * kf);
        Adjustment { round: j, kbound: cutoff }
    });

    Ok(Schedule { k, r, c, u, rounds, kbounds, adjusted })
}

impl Schedule {
    pub fn rounds_played(&self) -> u32 {
        self.rounds.len() as u32
    }

    /// `r e^(-k) + k / exp^(r) u + sum_{i=2}^r 2^(-k_i/4)`, evaluated on the
    /// unadjusted parameters.
    pub fn error_bound(&self) -> f64 {
        let kf = self.k as f64;
        let r = self.r;
        let first = r as f64 * (-kf).exp();
        let last = (kf.log2() - iterated_exp(r - 1, self.u)).exp2();
        let chernoff: f64 = (2..=r as usize).map(|i| (-self.kbounds[i] / 4.0).exp2()).sum();
        first + last + chernoff
    }

    pub fn total_bits(&self) -> u64 {
        self.rounds.iter().map(RoundParams::bits).sum()
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "r": self.r,
            "c": self.c,
            "u": self.u,
            "adjusted_round": self.adjusted.map(|a| a.round),
            "round_bits": self.rounds.iter().map(RoundParams::bits).collect::<Vec<_>>(),
        })
    }
}
