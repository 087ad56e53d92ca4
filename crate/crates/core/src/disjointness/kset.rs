use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted, duplicate-free subset of `[m]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KSet {
    m: u64,
    elements: Vec<u64>,
}

impl KSet {
    pub fn new(m: u64, mut elements: Vec<u64>) -> Result<Self> {
        elements.sort_unstable();
        if let Some(&bad) = elements.iter().find(|&&e| e == 0 || e > m) {
            return Err(Error::ElementOutOfRange { value: bad, m });
        }
        if elements.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate set element".into()));
        }
        Ok(Self { m, elements })
    }

    pub fn empty(m: u64) -> Self {
        Self { m, elements: Vec::new() }
    }

    pub(crate) fn from_sorted_unchecked(m: u64, elements: Vec<u64>) -> Self {
        debug_assert!(elements.windows(2).all(|w| w[0] < w[1]));
        Self { m, elements }
    }

    pub fn check_bound(&self, k: usize) -> Result<()> {
        if self.elements.len() > k {
            return Err(Error::SetTooLarge { len: self.elements.len(), k });
        }
        Ok(())
    }

    pub fn universe(&self) -> u64 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn contains(&self, e: u64) -> bool {
        self.elements.binary_search(&e).is_ok()
    }

    pub fn intersection(&self, other: &KSet) -> KSet {
        let elements = self.elements.iter().copied().filter(|&e| other.contains(e)).collect();
        Self::from_sorted_unchecked(self.m, elements)
    }

    pub fn is_disjoint(&self, other: &KSet) -> bool {
        self.elements.iter().all(|&e| !other.contains(e))
    }

    pub fn is_subset(&self, other: &KSet) -> bool {
        self.elements.iter().all(|&e| other.contains(e))
    }

    /// Two random `k`-subsets of `[m]`, disjoint or sharing exactly one
    /// element.
    pub fn random_pair<R: Rng + ?Sized>(m: u64, k: usize, intersecting: bool, rng: &mut R) -> Result<(KSet, KSet)> {
        let need = if intersecting { 2 * k - 1 } else { 2 * k };
        if k == 0 || need as u64 > m {
            return Err(Error::InvalidParameter(format!("cannot draw {need} distinct elements from [{m}]")));
        }
        let picked: Vec<u64> = sample(rng, m as usize, need).into_iter().map(|i| i as u64 + 1).collect();
        let alice = picked[..k].to_vec();
        let bob = if intersecting {
            std::iter::once(picked[0]).chain(picked[k..].iter().copied()).collect()
        } else {
            picked[k..].to_vec()
        };
        Ok((KSet::new(m, alice)?, KSet::new(m, bob)?))
    }
}
