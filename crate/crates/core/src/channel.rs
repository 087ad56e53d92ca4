//! Simulated two-party channel.
//!
//! Parties never exchange randomness: both derive the same labeled streams
//! from a master seed. Every message is recorded with its exact bit length,
//! senders must alternate, and a protocol may not exceed its round budget.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageKind {
    Index,
    ErrorSignal,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: Party,
    pub bits: u64,
    pub kind: MessageKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Disjoint,
    Intersecting,
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the label bytes.
fn label_hash(label: &str) -> u64 {
    label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Common random source shared by both parties.
///
/// `stream(label, index)` seeds a ChaCha8 generator with
/// `mix64(mix64(master ^ fnv1a(label)) ^ mix64(index + 0x9e3779b97f4a7c15))`.
/// The golden transcripts pin this derivation; changing it is a breaking
/// change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedRandomness {
    master: u64,
}

impl SharedRandomness {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn derive(&self, label: &str, index: u64) -> u64 {
        mix64(mix64(self.master ^ label_hash(label)) ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    }

    pub fn stream(&self, label: &str, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive(label, index))
    }
}

/// Per-trial master seed for Monte Carlo runs.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed ^ trial
}

#[derive(Debug)]
pub struct Channel {
    shared: SharedRandomness,
    max_rounds: u32,
    messages: Vec<Message>,
}

impl Channel {
    pub fn new(seed: u64, max_rounds: u32) -> Self {
        Self { shared: SharedRandomness::new(seed), max_rounds, messages: Vec::new() }
    }

    pub fn shared(&self) -> &SharedRandomness {
        &self.shared
    }

    pub fn send(&mut self, sender: Party, bits: u64, kind: MessageKind) -> Result<()> {
        if bits == 0 {
            return Err(Error::Channel("messages carry at least one bit".into()));
        }
        if self.messages.len() as u32 >= self.max_rounds {
            return Err(Error::Channel(format!("round budget {} exhausted", self.max_rounds)));
        }
        if self.messages.last().is_some_and(|m| m.sender == sender) {
            return Err(Error::Channel(format!("{sender:?} sent twice in a row")));
        }
        self.messages.push(Message { sender, bits, kind });
        Ok(())
    }

    pub fn rounds_used(&self) -> u32 {
        self.messages.len() as u32
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    /// Closes the channel, recording `output` as the protocol's answer.
    pub fn into_transcript(self, protocol: &str, params: serde_json::Value, output: Decision) -> Transcript {
        let total_bits = self.messages.iter().map(|m| m.bits).sum();
        Transcript {
            seed: self.shared.master(),
            protocol: protocol.to_string(),
            params,
            rounds: self.messages,
            output,
            total_bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub seed: u64,
    pub protocol: String,
    pub params: serde_json::Value,
    pub rounds: Vec<Message>,
    pub output: Decision,
    pub total_bits: u64,
}

impl Transcript {
    pub fn rounds_used(&self) -> u32 {
        self.rounds.len() as u32
    }

    pub fn per_round_bits(&self) -> Vec<u64> {
        self.rounds.iter().map(|m| m.bits).collect()
    }

    pub fn max_message(&self) -> u64 {
        self.rounds.iter().map(|m| m.bits).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}

pub trait Protocol {
    type Input;

    fn name(&self) -> &str;
    fn params(&self) -> serde_json::Value;
    fn max_rounds(&self) -> u32;
    fn execute(&self, alice: &Self::Input, bob: &Self::Input, channel: &mut Channel) -> Result<Decision>;
}

/// Runs `protocol` on the two inputs with shared randomness from `seed`.
pub fn run<P: Protocol>(protocol: &P, alice: &P::Input, bob: &P::Input, seed: u64) -> Result<(Decision, Transcript)> {
    let mut channel = Channel::new(seed, protocol.max_rounds());
    let output = protocol.execute(alice, bob, &mut channel)?;
    Ok((output, channel.into_transcript(protocol.name(), protocol.params(), output)))
}

/// 0-round protocol that always outputs the same answer.
#[derive(Debug, Clone, Copy)]
pub struct ConstantProtocol<T>(pub Decision, pub std::marker::PhantomData<T>);

impl<T> ConstantProtocol<T> {
    pub fn new(output: Decision) -> Self {
        Self(output, std::marker::PhantomData)
    }
}

impl<T> Protocol for ConstantProtocol<T> {
    type Input = T;

    fn name(&self) -> &str {
        "constant"
    }

    fn params(&self) -> serde_json::Value {
        serde_json::json!({ "output": self.0 })
    }

    fn max_rounds(&self) -> u32 {
        0
    }

    fn execute(&self, _: &T, _: &T, _: &mut Channel) -> Result<Decision> {
        Ok(self.0)
    }
}

/// Best error of a 0-round protocol for exists-equal on uniform inputs with
/// `t = 4n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroRoundBaseline {
    pub n: u64,
    /// `Pr[EE = 0] = (1 - 1/t)^n`.
    pub pr_disjoint: BigRational,
    /// `min(Pr[EE = 0], Pr[EE = 1])`.
    pub error: BigRational,
}

impl ZeroRoundBaseline {
    pub fn pr_disjoint_f64(&self) -> f64 {
        self.pr_disjoint.to_f64().unwrap_or(f64::NAN)
    }

    pub fn error_f64(&self) -> f64 {
        self.error.to_f64().unwrap_or(f64::NAN)
    }
}

pub fn zero_round_baseline_error(n: u64) -> Result<ZeroRoundBaseline> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let t = BigInt::from(4 * n);
    let base = BigRational::new(t.clone() - BigInt::one(), t);
    let pr = num_traits::pow::pow(base, n as usize);
    let other = BigRational::one() - pr.clone();
    let error = if pr < other { pr.clone() } else { other };
    Ok(ZeroRoundBaseline { n, pr_disjoint: pr, error })
}

/// `(1 - 1/(4n))^n` in floating point via `ln_1p`.
pub fn zero_round_pr_disjoint_f64(n: u64) -> f64 {
    let t = 4.0 * n as f64;
    (n as f64 * (-1.0 / t).ln_1p()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    struct PingPong(u32);

    impl Protocol for PingPong {
        type Input = ();
        fn name(&self) -> &str {
            "ping-pong"
        }
        fn params(&self) -> serde_json::Value {
            serde_json::json!({ "rounds": self.0 })
        }
        fn max_rounds(&self) -> u32 {
            self.0
        }
        fn execute(&self, _: &(), _: &(), ch: &mut Channel) -> Result<Decision> {
            let mut sender = Party::Alice;
            for i in 0..self.0 {
                let bits = ch.shared().stream("ping", i as u64).next_u32() as u64 % 7 + 1;
                ch.send(sender, bits, MessageKind::Raw)?;
                sender = sender.other();
            }
            Ok(Decision::Disjoint)
        }
    }

    #[test]
    fn same_seed_same_transcript() {
        let (_, a) = run(&PingPong(5), &(), &(), 42).unwrap();
        let (_, b) = run(&PingPong(5), &(), &(), 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.total_bits, a.per_round_bits().iter().sum::<u64>());
    }

    #[test]
    fn constant_protocol_is_silent() {
        let p = ConstantProtocol::<()>::new(Decision::Intersecting);
        let (out, tr) = run(&p, &(), &(), 0).unwrap();
        assert_eq!(out, Decision::Intersecting);
        assert!(tr.rounds.is_empty());
        assert_eq!(tr.total_bits, 0);
    }

    #[test]
    fn channel_rules() {
        let mut ch = Channel::new(0, 2);
        assert!(ch.send(Party::Alice, 0, MessageKind::Raw).is_err());
        ch.send(Party::Alice, 3, MessageKind::Index).unwrap();
        assert!(ch.send(Party::Alice, 3, MessageKind::Index).is_err());
        ch.send(Party::Bob, 3, MessageKind::Index).unwrap();
        assert!(ch.send(Party::Alice, 3, MessageKind::Index).is_err());
        assert_eq!(ch.rounds_used(), 2);
    }

    #[test]
    fn streams_are_label_and_index_sensitive() {
        let s = SharedRandomness::new(9);
        assert_eq!(s.stream("a", 1).next_u64(), s.stream("a", 1).next_u64());
        assert_ne!(s.derive("a", 1), s.derive("b", 1));
        assert_ne!(s.derive("a", 1), s.derive("a", 2));
        assert_ne!(s.derive("a", 1), SharedRandomness::new(10).derive("a", 1));
    }

    #[test]
    fn zero_round_small_n() {
        let b = zero_round_baseline_error(1).unwrap();
        assert_eq!(b.pr_disjoint, BigRational::new(3.into(), 4.into()));
        assert_eq!(b.error, BigRational::new(1.into(), 4.into()));
        assert!(zero_round_baseline_error(0).is_err());
    }

    #[test]
    fn zero_round_large_n() {
        let b = zero_round_baseline_error(1000).unwrap();
        let p = b.pr_disjoint_f64();
        assert!(p > 0.7786 && p < 0.7789, "{p}");
        assert!((zero_round_pr_disjoint_f64(1000) - p).abs() < 1e-12);
        assert!((zero_round_pr_disjoint_f64(10_000_000) - (-0.25f64).exp()).abs() < 1e-7);
    }
}
