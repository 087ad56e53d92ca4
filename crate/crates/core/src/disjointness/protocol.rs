//! Disjointness protocols run over the simulated channel.
//!
//! Alice holds `S_0` and Bob holds `S_1`. In round `i` the holder of `S_i`
//! sends (Bob in odd rounds, Alice in even ones) and the other party
//! replaces `S_(i-1)` by `S_(i+1) = S_(i-1) ∩ Z_i`. Because `Z_i ⊇ S_i`,
//! `S_i ∩ S_(i+1) = S_0 ∩ S_1` throughout, which is what makes the error
//! one-sided.

use rand::Rng;
use serde::Serialize;

use super::kset::KSet;
use super::round::{bernoulli_log2, round_step_virtual, RoundKind};
use super::schedule::Schedule;
use crate::channel::{Channel, Decision, MessageKind, Party, Protocol, Transcript};
use crate::error::{Error, Result};
use crate::grid::{GridParams, GridPoint};

/// Party holding `S_i`, i.e. the sender of round `i`.
fn holder(i: u32) -> Party {
    if i % 2 == 1 {
        Party::Bob
    } else {
        Party::Alice
    }
}

fn check_inputs(alice: &KSet, bob: &KSet, k: usize) -> Result<()> {
    alice.check_bound(k)?;
    bob.check_bound(k)?;
    if alice.universe() != bob.universe() {
        return Err(Error::InvalidParameter("inputs live in different universes".into()));
    }
    Ok(())
}

/// Current sets `S_0, S_1, ...` of a run, with the one-sidedness invariant
/// checked after every update.
struct Chain {
    sets: Vec<KSet>,
    core: KSet,
}

impl Chain {
    fn new(alice: &KSet, bob: &KSet) -> Self {
        Self { sets: vec![alice.clone(), bob.clone()], core: alice.intersection(bob) }
    }

    fn current(&self, i: usize) -> &KSet {
        &self.sets[i]
    }

    fn push(&mut self, next: KSet) -> Result<()> {
        let last = self.sets.last().expect("chain starts with two sets");
        if last.intersection(&next) != self.core {
            return Err(Error::Invariant(format!(
                "S_{} ∩ S_{} differs from S_0 ∩ S_1",
                self.sets.len() - 1,
                self.sets.len()
            )));
        }
        self.sets.push(next);
        Ok(())
    }

    fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(KSet::len).collect()
    }
}

/// The scheduled r-round protocol.
#[derive(Debug, Clone)]
pub struct SparseDisjointness {
    pub schedule: Schedule,
    /// Stop and answer "disjoint" as soon as the sender's current set is
    /// empty; sound because that set meets the other one in `S_0 ∩ S_1`.
    pub early_stop: bool,
}

impl SparseDisjointness {
    pub fn new(schedule: Schedule, early_stop: bool) -> Self {
        Self { schedule, early_stop }
    }

    fn execute_traced(&self, alice: &KSet, bob: &KSet, ch: &mut Channel) -> Result<(Decision, Vec<usize>)> {
        check_inputs(alice, bob, self.schedule.k)?;
        let mut chain = Chain::new(alice, bob);
        for (idx, params) in self.schedule.rounds.iter().enumerate() {
            let i = idx + 1;
            let sender_set = chain.current(i);
            if self.early_stop && sender_set.is_empty() {
                return Ok((Decision::Disjoint, chain.sizes()));
            }
            let mut rng = ch.shared().stream("disj/round", i as u64);
            let out = round_step_virtual(sender_set, chain.current(i - 1), params, &mut rng)?;
            match out.kind {
                RoundKind::ErrorSignal => {
                    ch.send(holder(i as u32), out.bits, MessageKind::ErrorSignal)?;
                    return Ok((Decision::Intersecting, chain.sizes()));
                }
                RoundKind::IndexSent => {
                    ch.send(holder(i as u32), out.bits, MessageKind::Index)?;
                    chain.push(out.receiver_set)?;
                }
            }
        }
        let last = chain.sets.last().expect("nonempty chain");
        let decision = if last.is_empty() { Decision::Disjoint } else { Decision::Intersecting };
        Ok((decision, chain.sizes()))
    }
}

impl Protocol for SparseDisjointness {
    type Input = KSet;

    fn name(&self) -> &str {
        "sparse-disjointness"
    }

    fn params(&self) -> serde_json::Value {
        let mut v = self.schedule.summary();
        v["early_stop"] = self.early_stop.into();
        v
    }

    fn max_rounds(&self) -> u32 {
        self.schedule.rounds_played()
    }

    fn execute(&self, alice: &KSet, bob: &KSet, ch: &mut Channel) -> Result<Decision> {
        self.execute_traced(alice, bob, ch).map(|(d, _)| d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseRun {
    pub decision: Decision,
    pub transcript: Transcript,
    /// `|S_0|, |S_1|, ...` as far as the run got.
    pub set_sizes: Vec<usize>,
}

pub fn run_sparse_disjointness(
    alice: &KSet,
    bob: &KSet,
    schedule: &Schedule,
    seed: u64,
    early_stop: bool,
) -> Result<SparseRun> {
    let protocol = SparseDisjointness::new(schedule.clone(), early_stop);
    let mut ch = Channel::new(seed, protocol.max_rounds());
    let (decision, set_sizes) = protocol.execute_traced(alice, bob, &mut ch)?;
    let transcript = ch.into_transcript(protocol.name(), protocol.params(), decision);
    Ok(SparseRun { decision, transcript, set_sizes })
}

/// One round: Alice sends a `hash_bits`-bit hash of each element (padded
/// to `k` hashes) and Bob reports an intersection on any hash collision.
#[derive(Debug, Clone, Copy)]
pub struct FolkloreOneRound {
    pub k: usize,
    pub hash_bits: u32,
}

impl FolkloreOneRound {
    pub fn new(k: usize, hash_bits: u32) -> Result<Self> {
        if k == 0 || !(1..=64).contains(&hash_bits) {
            return Err(Error::InvalidParameter(format!("need k >= 1 and 1 <= hash_bits <= 64, got {k}, {hash_bits}")));
        }
        Ok(Self { k, hash_bits })
    }

    /// Union bound `k^2 2^-hash_bits` on the false-intersection rate.
    pub fn false_positive_bound(&self) -> f64 {
        (self.k as f64).powi(2) * (-(self.hash_bits as f64)).exp2()
    }
}

impl Protocol for FolkloreOneRound {
    type Input = KSet;

    fn name(&self) -> &str {
        "folklore-one-round"
    }

    fn params(&self) -> serde_json::Value {
        serde_json::json!({ "k": self.k, "hash_bits": self.hash_bits })
    }

    fn max_rounds(&self) -> u32 {
        1
    }

    fn execute(&self, alice: &KSet, bob: &KSet, ch: &mut Channel) -> Result<Decision> {
        check_inputs(alice, bob, self.k)?;
        let shift = 64 - self.hash_bits;
        let shared = *ch.shared();
        let hash = |e: u64| shared.derive("folklore/hash", e) >> shift;
        let mut sent: Vec<u64> = alice.elements().iter().map(|&e| hash(e)).collect();
        sent.sort_unstable();
        ch.send(Party::Alice, self.k as u64 * self.hash_bits as u64, MessageKind::Raw)?;
        let hit = bob.elements().iter().any(|&e| sent.binary_search(&hash(e)).is_ok());
        Ok(if hit { Decision::Intersecting } else { Decision::Disjoint })
    }
}

/// Frozen slack constants of the halving baseline: the set created in round
/// `j` may hold at most `e + A sqrt(e) + B` elements, `e = k / 2^ceil(j/2)`.
pub const HW_SLACK_A: f64 = 3.0;
pub const HW_SLACK_B: f64 = 4.0;
/// Rounds beyond `2 ceil(log2 k)`.
pub const HW_EXTRA_ROUNDS: u32 = 10;

/// Halving baseline: each round the sender names the first shared random
/// set (density 1/2) containing its current set, Elias-gamma coded, so the
/// receiver's set halves in expectation every time it is updated.
#[derive(Debug, Clone, Copy)]
pub struct HwBaseline {
    pub k: usize,
}

impl HwBaseline {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(Self { k })
    }

    pub fn rounds(&self) -> u32 {
        let lg = (self.k as f64).log2().ceil() as u32;
        2 * lg + HW_EXTRA_ROUNDS
    }

    /// Largest allowed size of `S_(j+1)`, the set produced in round `j`.
    pub fn threshold(&self, j: u32) -> f64 {
        let e = self.k as f64 / 2f64.powi(j.div_ceil(2) as i32);
        e + HW_SLACK_A * e.sqrt() + HW_SLACK_B
    }
}

/// Bit length of the Elias-gamma code of `j >= 1`, given `log2 j`.
fn elias_gamma_bits(floor_log2: u64) -> u64 {
    2 * floor_log2 + 1
}

/// `floor(log2 J)` for `J ~ Geometric(2^-s)` on `{1, 2, ...}`.
fn geometric_floor_log2<R: Rng + ?Sized>(rng: &mut R, s: usize) -> u64 {
    let uniform: f64 = 1.0 - rng.random::<f64>();
    let neg_ln_u = -uniform.ln();
    let q_log2 = -(s as f64);
    // -ln(1 - q), stable for tiny q
    let log2_rate = if q_log2 > -30.0 { (-(-q_log2.exp2()).ln_1p()).log2() } else { q_log2 };
    let log2_j = neg_ln_u.max(f64::MIN_POSITIVE).log2() - log2_rate;
    if log2_j < 52.0 {
        let j = log2_j.exp2().ceil().max(1.0) as u64;
        (u64::BITS - 1 - j.leading_zeros()) as u64
    } else {
        log2_j.floor() as u64
    }
}

impl Protocol for HwBaseline {
    type Input = KSet;

    fn name(&self) -> &str {
        "hw-baseline"
    }

    fn params(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "rounds": self.rounds(),
            "slack_a": HW_SLACK_A,
            "slack_b": HW_SLACK_B,
        })
    }

    fn max_rounds(&self) -> u32 {
        self.rounds()
    }

    fn execute(&self, alice: &KSet, bob: &KSet, ch: &mut Channel) -> Result<Decision> {
        check_inputs(alice, bob, self.k)?;
        let mut chain = Chain::new(alice, bob);
        for i in 1..=self.rounds() {
            let sender_set = chain.current(i as usize);
            if sender_set.is_empty() {
                return Ok(Decision::Disjoint);
            }
            let mut rng = ch.shared().stream("hw/round", i as u64);
            let bits = elias_gamma_bits(geometric_floor_log2(&mut rng, sender_set.len()));
            ch.send(holder(i), bits, MessageKind::Index)?;
            let receiver = chain.current(i as usize - 1);
            let kept = receiver
                .elements()
                .iter()
                .copied()
                .filter(|&e| sender_set.contains(e) || bernoulli_log2(&mut rng, -1.0))
                .collect();
            let next = KSet::from_sorted_unchecked(receiver.universe(), kept);
            let too_big = next.len() as f64 > self.threshold(i);
            chain.push(next)?;
            if too_big {
                return Ok(Decision::Intersecting);
            }
        }
        let last = chain.sets.last().expect("nonempty chain");
        Ok(if last.is_empty() { Decision::Disjoint } else { Decision::Intersecting })
    }
}

/// Exists-equal as disjointness: coordinate `i` with value `x_i` becomes
/// element `(i-1) t + x_i` of `[t n]`.
pub fn ee_to_disjointness(params: &GridParams, x: &GridPoint, y: &GridPoint) -> Result<(KSet, KSet)> {
    params.validate(x)?;
    params.validate(y)?;
    let t = params.t as u64;
    let m = t * params.n as u64;
    let encode = |p: &GridPoint| -> Vec<u64> {
        p.coords().iter().enumerate().map(|(i, &v)| i as u64 * t + v as u64).collect()
    };
    Ok((KSet::from_sorted_unchecked(m, encode(x)), KSet::from_sorted_unchecked(m, encode(y))))
}
