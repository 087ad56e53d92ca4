//! One round of the protocol: the sender looks for the first of `l` shared
//! random subsets of `[m]` (each element included with probability `p`)
//! that contains its current set `S`, and the receiver replaces its current
//! set `T` by `T ∩ Z`.
//!
//! `l` is astronomically large in the real schedule, so the default sampler
//! is virtual: the error signal (no candidate contains `S`) fires with
//! probability `(1 - p^|S|)^l`, and conditioned on containment every
//! element outside `S` is in `Z` independently with probability `p`, so the
//! receiver keeps `T ∩ S` and thins `T \ S`. The literal sampler draws the
//! candidate sets and exists to validate that equivalence at toy scale.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, RngCore};
use serde::Serialize;

use super::kset::KSet;
use super::schedule::RoundParams;
use crate::error::{Error, Result};

/// Largest `m * l` the literal sampler will draw.
pub const LITERAL_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundKind {
    IndexSent,
    ErrorSignal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundOutcome {
    pub kind: RoundKind,
    pub bits: u64,
    /// Receiver's updated set; unchanged after an error signal.
    pub receiver_set: KSet,
}

/// Bernoulli trial with success probability `2^log2_p`, exact even when the
/// probability underflows `f64`.
pub fn bernoulli_log2<R: RngCore + ?Sized>(rng: &mut R, log2_p: f64) -> bool {
    if log2_p >= 0.0 {
        return true;
    }
    if log2_p >= -60.0 {
        return rng.random::<f64>() < log2_p.exp2();
    }
    // p = 2^-whole * 2^-frac: `whole` fair coins must all come up zero.
    let a = -log2_p;
    let whole = a.floor();
    let frac = a - whole;
    let mut remaining = whole;
    while remaining >= 64.0 {
        if rng.next_u64() != 0 {
            return false;
        }
        remaining -= 64.0;
    }
    let tail = remaining as u32;
    if tail > 0 && rng.next_u64() >> (64 - tail) != 0 {
        return false;
    }
    rng.random::<f64>() < (-frac).exp2()
}

/// `(1 - p^s)^l`, computed as `exp(-l * -ln(1 - p^s))` in log space.
pub fn error_signal_probability(set_size: usize, params: &RoundParams) -> f64 {
    if set_size == 0 {
        return 0.0;
    }
    let log2_q = set_size as f64 * params.log2_p;
    let log2_v = if log2_q > -30.0 {
        (-(-log2_q.exp2()).ln_1p()).log2()
    } else {
        // -ln(1-q) = q (1 + q/2 + ...)
        log2_q + (log2_q.exp2() / 2.0) / std::f64::consts::LN_2
    };
    let log2_l = match params.l_exact {
        Some(l) => (l as f64).log2(),
        None => params.log2_l,
    };
    (-(log2_l + log2_v).exp2()).exp()
}

fn check_pair(sender: &KSet, receiver: &KSet) -> Result<()> {
    if sender.universe() != receiver.universe() {
        return Err(Error::InvalidParameter(format!(
            "universe mismatch: {} vs {}",
            sender.universe(),
            receiver.universe()
        )));
    }
    Ok(())
}

pub fn round_step_virtual<R: Rng + ?Sized>(
    sender: &KSet,
    receiver: &KSet,
    params: &RoundParams,
    rng: &mut R,
) -> Result<RoundOutcome> {
    params.validate()?;
    check_pair(sender, receiver)?;
    let bits = params.bits();
    let p_err = error_signal_probability(sender.len(), params);
    if rng.random::<f64>() < p_err {
        return Ok(RoundOutcome { kind: RoundKind::ErrorSignal, bits, receiver_set: receiver.clone() });
    }
    let kept = receiver
        .elements()
        .iter()
        .copied()
        .filter(|&e| sender.contains(e) || bernoulli_log2(rng, params.log2_p))
        .collect();
    Ok(RoundOutcome {
        kind: RoundKind::IndexSent,
        bits,
        receiver_set: KSet::from_sorted_unchecked(receiver.universe(), kept),
    })
}

pub fn round_step_literal<R: Rng + ?Sized>(
    sender: &KSet,
    receiver: &KSet,
    params: &RoundParams,
    rng: &mut R,
) -> Result<RoundOutcome> {
    params.validate()?;
    check_pair(sender, receiver)?;
    let m = sender.universe();
    let l = params
        .l_exact
        .filter(|&l| l.saturating_mul(m) <= LITERAL_BUDGET)
        .ok_or_else(|| Error::InvalidParameter(format!("literal sampling needs m*l <= {LITERAL_BUDGET}")))?;
    let bits = params.bits();
    for _ in 0..l {
        let candidate: Vec<u64> = (1..=m).filter(|_| bernoulli_log2(rng, params.log2_p)).collect();
        let z = KSet::from_sorted_unchecked(m, candidate);
        if sender.is_subset(&z) {
            return Ok(RoundOutcome { kind: RoundKind::IndexSent, bits, receiver_set: receiver.intersection(&z) });
        }
    }
    Ok(RoundOutcome { kind: RoundKind::ErrorSignal, bits, receiver_set: receiver.clone() })
}

/// Outcome key: `(error signal, receiver's resulting set)`.
pub type OutcomeKey = (bool, Vec<u64>);

/// Exact outcome distribution of the virtual sampler, from its closed form.
pub fn exact_distribution_virtual(
    sender: &KSet,
    receiver: &KSet,
    p: &BigRational,
    l: u32,
) -> BTreeMap<OutcomeKey, BigRational> {
    let one = BigRational::one();
    let q = num_traits::pow::pow(p.clone(), sender.len());
    let p_err = num_traits::pow::pow(one.clone() - q, l as usize);
    let fixed: Vec<u64> = receiver.elements().iter().copied().filter(|&e| sender.contains(e)).collect();
    let free: Vec<u64> = receiver.elements().iter().copied().filter(|&e| !sender.contains(e)).collect();
    let mut out = BTreeMap::new();
    out.insert((true, receiver.elements().to_vec()), p_err.clone());
    let ok = one.clone() - p_err;
    for mask in 0u64..1 << free.len() {
        let mut set = fixed.clone();
        let mut w = ok.clone();
        for (bit, &e) in free.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                set.push(e);
                w *= p.clone();
            } else {
                w *= one.clone() - p.clone();
            }
        }
        set.sort_unstable();
        *out.entry((false, set)).or_insert_with(BigRational::zero) += w;
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Exact outcome distribution of the literal sampler, by enumerating every
/// candidate subset of `[m]` at each of the `l` draws.
pub fn exact_distribution_literal(
    sender: &KSet,
    receiver: &KSet,
    p: &BigRational,
    l: u32,
) -> Result<BTreeMap<OutcomeKey, BigRational>> {
    let m = sender.universe();
    if m > 16 {
        return Err(Error::InvalidParameter("exact literal enumeration needs m <= 16".into()));
    }
    let one = BigRational::one();
    let mut out: BTreeMap<OutcomeKey, BigRational> = BTreeMap::new();
    let mut not_found = one.clone();
    for _ in 0..l {
        let mut miss_mass = BigRational::zero();
        for z in 0u32..1 << m {
            let mut w = one.clone();
            for e in 0..m {
                w *= if z >> e & 1 == 1 { p.clone() } else { one.clone() - p.clone() };
            }
            let contains = sender.elements().iter().all(|&e| z >> (e - 1) & 1 == 1);
            if contains {
                let kept: Vec<u64> = receiver.elements().iter().copied().filter(|&e| z >> (e - 1) & 1 == 1).collect();
                *out.entry((false, kept)).or_insert_with(BigRational::zero) += not_found.clone() * w;
            } else {
                miss_mass += w;
            }
        }
        not_found *= miss_mass;
    }
    *out.entry((true, receiver.elements().to_vec())).or_insert_with(BigRational::zero) += not_found;
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ks(m: u64, e: &[u64]) -> KSet {
        KSet::new(m, e.to_vec()).unwrap()
    }

    #[test]
    fn empty_sender_never_errs() {
        let params = RoundParams::new(0.5, 1).unwrap();
        assert_eq!(error_signal_probability(0, &params), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let out = round_step_virtual(&ks(8, &[]), &ks(8, &[1, 2, 3]), &params, &mut rng).unwrap();
            assert_eq!(out.kind, RoundKind::IndexSent);
            assert!(out.receiver_set.is_subset(&ks(8, &[1, 2, 3])));
        }
    }

    #[test]
    fn receiver_inside_sender_is_preserved() {
        let params = RoundParams::from_logs(-20.0, 30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = ks(16, &[2, 5, 9]);
        let t = ks(16, &[2, 9]);
        for _ in 0..100 {
            let out = round_step_virtual(&s, &t, &params, &mut rng).unwrap();
            if out.kind == RoundKind::IndexSent {
                assert_eq!(out.receiver_set, t);
            }
        }
    }

    #[test]
    fn error_rate_one_sixteenth() {
        let params = RoundParams::new(0.5, 4).unwrap();
        assert!((error_signal_probability(1, &params) - 1.0 / 16.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let trials = 100_000;
        let s = ks(8, &[3]);
        let t = ks(8, &[1, 2]);
        let errs = (0..trials)
            .filter(|_| round_step_virtual(&s, &t, &params, &mut rng).unwrap().kind == RoundKind::ErrorSignal)
            .count() as f64;
        let p = 1.0 / 16.0;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((errs / trials as f64 - p).abs() <= 3.0 * sigma);
    }

    #[test]
    fn literal_full_universe() {
        // S = [m], l = 1: error iff the single candidate misses an element
        let m = 4;
        let p = 0.25;
        let params = RoundParams::new(p, 1).unwrap();
        let s = ks(m, &[1, 2, 3, 4]);
        let t = ks(m, &[]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let trials = 100_000;
        let errs = (0..trials)
            .filter(|_| round_step_literal(&s, &t, &params, &mut rng).unwrap().kind == RoundKind::ErrorSignal)
            .count() as f64;
        let expect = 1.0 - p.powi(m as i32);
        let sigma = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!((errs / trials as f64 - expect).abs() <= 3.0 * sigma + 1e-12);
        let exact = exact_distribution_literal(&s, &t, &BigRational::new(1.into(), 4.into()), 1).unwrap();
        assert_eq!(exact[&(true, vec![])], BigRational::new(255.into(), 256.into()));
    }

    #[test]
    fn literal_is_deterministic() {
        let params = RoundParams::new(0.5, 4).unwrap();
        let s = ks(8, &[1, 4]);
        let t = ks(8, &[2, 3, 5]);
        let a = round_step_literal(&s, &t, &params, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let b = round_step_literal(&s, &t, &params, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_parameters_rejected() {
        let bad = RoundParams::from_logs(0.0, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(round_step_virtual(&ks(4, &[1]), &ks(4, &[2]), &bad, &mut rng).is_err());
        let huge = RoundParams::from_logs(-1.0, 80.0);
        assert!(round_step_literal(&ks(4, &[1]), &ks(4, &[2]), &huge, &mut rng).is_err());
    }

    #[test]
    fn bernoulli_tiny_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..10_000).all(|_| !bernoulli_log2(&mut rng, -1e6)));
        // 2^-62.5 is never hit in a small sample, 2^-0.5 about 70% of the time
        let hits = (0..100_000).filter(|_| bernoulli_log2(&mut rng, -0.5)).count() as f64 / 1e5;
        assert!((hits - 0.5f64.sqrt()).abs() < 0.01);
        let hits = (0..100_000).filter(|_| bernoulli_log2(&mut rng, -62.5)).count();
        assert_eq!(hits, 0);
    }

    #[test]
    fn exact_distributions_sum_to_one() {
        let p = BigRational::new(1.into(), 2.into());
        let s = ks(8, &[1, 2]);
        let t = ks(8, &[3, 4, 5]);
        let v: BigRational = exact_distribution_virtual(&s, &t, &p, 3).values().sum();
        let l: BigRational = exact_distribution_literal(&s, &t, &p, 3).unwrap().values().sum();
        assert_eq!(v, BigRational::one());
        assert_eq!(l, BigRational::one());
    }
}
