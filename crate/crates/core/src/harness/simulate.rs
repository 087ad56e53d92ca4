//! Monte Carlo drivers for the disjointness protocols.
//!
//! Trial `j` uses master seed `seed ^ j` for both its inputs (stream
//! `"inputs"`) and the protocol's shared randomness, so every figure is a
//! function of the configuration alone. Workers only add integer counters,
//! which makes the summaries independent of the thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::wald_ci95;
use crate::channel::{run, trial_seed, zero_round_pr_disjoint_f64, Decision, SharedRandomness, Transcript};
use crate::disjointness::{
    compute_schedule, ee_to_disjointness, iterated_log, run_sparse_disjointness, FolkloreOneRound, HwBaseline, KSet,
    Schedule,
};
use crate::error::{Error, Result};
use crate::grid::{exists_equal, uniform_point, GridParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum ProtocolChoice {
    Sparse,
    Folklore { hash_bits: u32 },
    Hw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Disjoint,
    Intersecting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessConfig {
    pub protocol: ProtocolChoice,
    pub k: usize,
    pub m: u64,
    pub r: u32,
    pub c: f64,
    pub seed: u64,
    pub trials: u64,
    pub early_stop: bool,
    pub inputs: InputKind,
}

impl DisjointnessConfig {
    pub fn sparse(k: usize, m: u64, r: u32, seed: u64, trials: u64) -> Self {
        Self {
            protocol: ProtocolChoice::Sparse,
            k,
            m,
            r,
            c: 2.0,
            seed,
            trials,
            early_stop: true,
            inputs: InputKind::Disjoint,
        }
    }

    pub fn with_inputs(mut self, inputs: InputKind) -> Self {
        self.inputs = inputs;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitStats {
    /// Mean bits of round `i` over all trials (0 when a trial stopped
    /// earlier).
    pub per_round: Vec<f64>,
    pub total: f64,
    pub max_message: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisjointnessSummary {
    pub config: DisjointnessConfig,
    pub trials: u64,
    pub errors: u64,
    pub error_rate: f64,
    pub ci95: f64,
    pub bits: BitStats,
    pub rounds_used_histogram: BTreeMap<u32, u64>,
    /// Closed-form error bound of the schedule, for the sparse protocol.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_bound: Option<f64>,
    /// Exact per-round widths `ceil(log2(l_i + 1))` of the schedule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule_bits: Option<Vec<u64>>,
    /// Rounds whose recorded width differed from the schedule.
    pub accounting_mismatches: u64,
}

#[derive(Debug, Clone, Default)]
struct Acc {
    errors: u64,
    per_round: Vec<u128>,
    total: u128,
    max_message: u64,
    rounds: BTreeMap<u32, u64>,
    mismatches: u64,
}

impl Acc {
    fn add(&mut self, transcript: &Transcript, wrong: bool, expected_bits: Option<&[u64]>) {
        self.errors += wrong as u64;
        if self.per_round.len() < transcript.rounds.len() {
            self.per_round.resize(transcript.rounds.len(), 0);
        }
        for (i, msg) in transcript.rounds.iter().enumerate() {
            self.per_round[i] += msg.bits as u128;
            if expected_bits.is_some_and(|b| b.get(i) != Some(&msg.bits)) {
                self.mismatches += 1;
            }
        }
        self.total += transcript.total_bits as u128;
        self.max_message = self.max_message.max(transcript.max_message());
        *self.rounds.entry(transcript.rounds_used()).or_default() += 1;
    }

    fn merge(mut self, other: Acc) -> Acc {
        self.errors += other.errors;
        if self.per_round.len() < other.per_round.len() {
            self.per_round.resize(other.per_round.len(), 0);
        }
        for (a, b) in self.per_round.iter_mut().zip(other.per_round) {
            *a += b;
        }
        self.total += other.total;
        self.max_message = self.max_message.max(other.max_message);
        for (r, c) in other.rounds {
            *self.rounds.entry(r).or_default() += c;
        }
        self.mismatches += other.mismatches;
        self
    }
}

enum Runner {
    Sparse(Schedule),
    Folklore(FolkloreOneRound),
    Hw(HwBaseline),
}

impl Runner {
    fn build(cfg: &DisjointnessConfig) -> Result<Self> {
        Ok(match cfg.protocol {
            ProtocolChoice::Sparse => Runner::Sparse(compute_schedule(cfg.k, cfg.r, cfg.c)?),
            ProtocolChoice::Folklore { hash_bits } => Runner::Folklore(FolkloreOneRound::new(cfg.k, hash_bits)?),
            ProtocolChoice::Hw => Runner::Hw(HwBaseline::new(cfg.k)?),
        })
    }

    fn run(&self, a: &KSet, b: &KSet, seed: u64, early_stop: bool) -> Result<Transcript> {
        Ok(match self {
            Runner::Sparse(s) => run_sparse_disjointness(a, b, s, seed, early_stop)?.transcript,
            Runner::Folklore(p) => run(p, a, b, seed)?.1,
            Runner::Hw(p) => run(p, a, b, seed)?.1,
        })
    }

    fn schedule_bits(&self) -> Option<Vec<u64>> {
        match self {
            Runner::Sparse(s) => Some(s.rounds.iter().map(|r| r.bits()).collect()),
            _ => None,
        }
    }
}

fn summarize(cfg: DisjointnessConfig, acc: Acc, error_bound: Option<f64>, schedule_bits: Option<Vec<u64>>) -> DisjointnessSummary {
    let n = cfg.trials as f64;
    DisjointnessSummary {
        config: cfg,
        trials: cfg.trials,
        errors: acc.errors,
        error_rate: acc.errors as f64 / n,
        ci95: wald_ci95(acc.errors, cfg.trials),
        bits: BitStats {
            per_round: acc.per_round.iter().map(|&b| b as f64 / n).collect(),
            total: acc.total as f64 / n,
            max_message: acc.max_message,
        },
        rounds_used_histogram: acc.rounds,
        error_bound,
        schedule_bits,
        accounting_mismatches: acc.mismatches,
    }
}

/// Runs `trials` independent protocol executions on random inputs.
pub fn simulate_disjointness(cfg: &DisjointnessConfig) -> Result<DisjointnessSummary> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let runner = Runner::build(cfg)?;
    let expected = runner.schedule_bits();
    let intersecting = cfg.inputs == InputKind::Intersecting;
    let truth = if intersecting { Decision::Intersecting } else { Decision::Disjoint };
    let acc = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<Acc> {
            let seed = trial_seed(cfg.seed, trial);
            let mut rng = SharedRandomness::new(seed).stream("inputs", 0);
            let (a, b) = KSet::random_pair(cfg.m, cfg.k, intersecting, &mut rng)?;
            let transcript = runner.run(&a, &b, seed, cfg.early_stop)?;
            let mut acc = Acc::default();
            acc.add(&transcript, transcript.output != truth, expected.as_deref());
            Ok(acc)
        })
        .try_reduce(Acc::default, |a, b| Ok(a.merge(b)))?;
    let bound = match &runner {
        Runner::Sparse(s) => Some(s.error_bound()),
        _ => None,
    };
    Ok(summarize(*cfg, acc, bound, expected))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistsEqualConfig {
    pub n: usize,
    pub r: u32,
    pub c: f64,
    pub seed: u64,
    pub trials: u64,
    pub early_stop: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistsEqualSummary {
    pub config: ExistsEqualConfig,
    pub t: u32,
    pub trials: u64,
    /// Trials with `EE(x, y) = 1`.
    pub equal_instances: u64,
    /// `(1 - 1/t)^n`, the probability of `EE = 0`.
    pub pr_ee_zero: f64,
    pub errors: u64,
    pub error_rate: f64,
    pub ci95: f64,
    /// Intersecting instances answered "disjoint"; always 0.
    pub one_sided_violations: u64,
    pub mean_total_bits: f64,
}

/// Exists-equal on uniform `x, y ∈ [4n]^n`, solved by the reduction to
/// disjointness with `k = n` and `m = 4n^2`.
pub fn simulate_exists_equal(cfg: &ExistsEqualConfig) -> Result<ExistsEqualSummary> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let grid = GridParams::exists_equal(cfg.n)?;
    let schedule = compute_schedule(cfg.n, cfg.r, cfg.c)?;
    let (equal, errors, violations, bits) = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<(u64, u64, u64, u128)> {
            let seed = trial_seed(cfg.seed, trial);
            let mut rng = SharedRandomness::new(seed).stream("inputs", 0);
            let x = uniform_point(&grid, &mut rng);
            let y = uniform_point(&grid, &mut rng);
            let ee = exists_equal(&x, &y)?;
            let (a, b) = ee_to_disjointness(&grid, &x, &y)?;
            let run = run_sparse_disjointness(&a, &b, &schedule, seed, cfg.early_stop)?;
            let says_equal = run.decision == Decision::Intersecting;
            Ok((ee as u64, (says_equal != ee) as u64, (ee && !says_equal) as u64, run.transcript.total_bits as u128))
        })
        .try_reduce(|| (0, 0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3)))?;
    Ok(ExistsEqualSummary {
        config: *cfg,
        t: grid.t,
        trials: cfg.trials,
        equal_instances: equal,
        pr_ee_zero: zero_round_pr_disjoint_f64(cfg.n as u64),
        errors,
        error_rate: errors as f64 / cfg.trials as f64,
        ci95: wald_ci95(errors, cfg.trials),
        one_sided_violations: violations,
        mean_total_bits: bits as f64 / cfg.trials as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub r: u32,
    pub total_bits: f64,
    pub bits_over_k_logr_k: f64,
    pub error_rate: f64,
}

/// Sparse protocol on disjoint inputs for every `(k, r)` pair with
/// `r <= log* k`; the universe is `m = max(2^16, 4k)`.
pub fn sweep(ks: &[usize], rs: &[u32], trials: u64, seed: u64, c: f64) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &k in ks {
        for &r in rs {
            let mut cfg = DisjointnessConfig::sparse(k, (1u64 << 16).max(4 * k as u64), r, seed, trials);
            cfg.c = c;
            let s = simulate_disjointness(&cfg)?;
            let scale = k as f64 * iterated_log(r, k as f64)?;
            rows.push(SweepRow {
                k,
                r,
                total_bits: s.bits.total,
                bits_over_k_logr_k: s.bits.total / scale,
                error_rate: s.error_rate,
            });
        }
    }
    Ok(rows)
}
