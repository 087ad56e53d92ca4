//! Exhaustive and randomized verification suites for the down-shift
//! machinery. Each suite counts every case it examined, so a passing
//! verdict always comes with the amount of work behind it.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::SharedRandomness;
use crate::downshift::{
    down, down_i, down_i_via_ia, down_ia, extract_t, find_box_witness, is_i_ideal, is_ideal, isoperimetry_pipeline,
    verify_conjecture, verify_list_lemma, ConjectureConfig, ConjectureReport, ConjectureVerdict, PipelineOptions,
    TableFamily,
};
use crate::error::Result;
use crate::grid::{CoordSet, GridParams, GridSet};

/// At most this many failure descriptions are kept verbatim.
const MAX_LISTED: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: u64,
    pub checks: u64,
    pub failure_count: u64,
    pub failures: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Default)]
struct Outcome {
    cases: u64,
    checks: u64,
    failure_count: u64,
    failures: Vec<String>,
}

impl Outcome {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failure_count += 1;
            if self.failures.len() < MAX_LISTED {
                self.failures.push(what());
            }
        }
    }

    fn merge(mut self, other: Outcome) -> Outcome {
        self.cases += other.cases;
        self.checks += other.checks;
        self.failure_count += other.failure_count;
        for f in other.failures {
            if self.failures.len() < MAX_LISTED {
                self.failures.push(f);
            }
        }
        self
    }

    fn finish(self, name: &str) -> SuiteReport {
        SuiteReport {
            name: name.to_string(),
            cases: self.cases,
            checks: self.checks,
            passed: self.failure_count == 0,
            failure_count: self.failure_count,
            failures: self.failures,
        }
    }
}

/// Every subset of a grid with at most 16 points, by bitmask.
pub fn all_subsets(params: GridParams) -> Result<Vec<GridSet>> {
    let size = params.check_codec()?;
    assert!(size <= 16, "exhaustive subset listing needs at most 16 points");
    (0u64..1 << size)
        .map(|mask| GridSet::from_codes(params, (0..size).filter(|b| mask >> b & 1 == 1).collect()))
        .collect()
}

/// `count` random subsets, each point kept with probability 1/2.
pub fn random_subsets(params: GridParams, count: usize, seed: u64, label: &str) -> Result<Vec<GridSet>> {
    let size = params.check_codec()?;
    (0..count as u64)
        .map(|j| {
            let mut rng = SharedRandomness::new(seed).stream(label, j);
            GridSet::from_codes(params, (0..size).filter(|_| rng.random::<bool>()).collect())
        })
        .collect()
}

fn check_downshift(set: &GridSet) -> Outcome {
    let mut out = Outcome { cases: 1, ..Outcome::default() };
    let params = *set.params();
    let n = params.n;
    let tag = || format!("{:?}", set.to_json());
    for i in 1..=n {
        for a in 2..=params.t {
            let img = down_ia(set, i, a).expect("valid shift");
            out.check(img.len() == set.len(), || format!("|down_{{{i},{a}}}(K)| != |K| for K={}", tag()));
        }
        let di = down_i(set, i).expect("valid index");
        out.check(di.len() == set.len(), || format!("|down_{i}(K)| != |K| for K={}", tag()));
        out.check(is_i_ideal(&di, i).expect("valid index"), || format!("down_{i}(K) not an {i}-ideal for K={}", tag()));
        for j in (1..=n).filter(|&j| j != i) {
            if is_i_ideal(set, j).expect("valid index") {
                out.check(is_i_ideal(&di, j).expect("valid index"), || {
                    format!("down_{i} broke {j}-ideality for K={}", tag())
                });
            }
        }
        let (via, _) = down_i_via_ia(set, i).expect("valid index");
        out.check(via == di, || format!("down_{i} differs from iterated down_{{{i},a}} for K={}", tag()));
    }
    let d = down(set);
    out.check(d.len() == set.len(), || format!("|down(K)| != |K| for K={}", tag()));
    out.check(is_ideal(&d), || format!("down(K) not an ideal for K={}", tag()));
    out.check(down(&d) == d, || format!("down not idempotent on K={}", tag()));
    for x in d.iter() {
        let ok = extract_t(set, &x).is_ok_and(|t| {
            t.is_subset(set) && down(&t) == GridSet::product_box(params, x.coords()).expect("x in grid")
        });
        out.check(ok, || format!("extract_T failed for x={x}, K={}", tag()));
    }
    if !set.is_empty() {
        out.check(find_box_witness(set).is_ok(), || format!("no box witness for K={}", tag()));
    }
    out
}

/// Cardinality, ideality, `down_i` via `down_{i,a}`, idempotence,
/// `extract_T` and witness existence on every given set.
pub fn downshift_suite(sets: &[GridSet]) -> SuiteReport {
    sets.par_iter()
        .map(check_downshift)
        .reduce(Outcome::default, Outcome::merge)
        .finish("downshift")
}

/// Witness existence only, for larger random sets.
pub fn witness_suite(sets: &[GridSet]) -> SuiteReport {
    sets.par_iter()
        .map(|set| {
            let mut out = Outcome { cases: 1, ..Outcome::default() };
            if !set.is_empty() {
                let w = find_box_witness(set);
                out.check(w.is_ok(), || format!("no box witness: {w:?}"));
            }
            out
        })
        .reduce(Outcome::default, Outcome::merge)
        .finish("box-witness")
}

/// Default downshift workload: all 256 subsets of `[2]^3` and 1000 random
/// subsets of `[3]^3`.
pub fn default_downshift_sets(seed: u64) -> Result<Vec<GridSet>> {
    let mut sets = all_subsets(GridParams::new(2, 3)?)?;
    sets.extend(random_subsets(GridParams::new(3, 3)?, 1000, seed, "suite/downshift")?);
    Ok(sets)
}

/// `E f(|B ∩ down K|) <= E f(|B ∩ K|)` for every subset of `[2]^2` and
/// `[2]^3`, `M ∈ {1, 2}`, all table families; equality on ideals.
pub fn list_lemma_suite() -> Result<SuiteReport> {
    let mut jobs = Vec::new();
    for n in [2usize, 3] {
        let params = GridParams::new(2, n)?;
        for set in all_subsets(params)? {
            for m in 1..=2 {
                for family in TableFamily::ALL {
                    jobs.push((set.clone(), m, family));
                }
            }
        }
    }
    let out = jobs
        .par_iter()
        .map(|(set, m, family)| -> Result<Outcome> {
            let n = set.params().n;
            let f = family.build(1 << n);
            let check = verify_list_lemma(set, &CoordSet::full(n), *m, &f)?;
            let mut out = Outcome { cases: 1, ..Outcome::default() };
            out.check(check.holds, || format!("list lemma fails: f={family}, M={m}, K={:?}", set.to_json()));
            if check.set_is_ideal {
                out.check(check.equal, || format!("no equality on ideal: f={family}, M={m}, K={:?}", set.to_json()));
            }
            Ok(out)
        })
        .try_reduce(Outcome::default, |a, b| Ok(a.merge(b)))?;
    Ok(out.finish("list-lemma"))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureSuiteReport {
    pub configs: usize,
    pub sets_checked: u128,
    pub box_minimal: usize,
    pub counterexamples: Vec<ConjectureReport>,
}

/// Runs the conjecture verifier on every feasible configuration in the
/// budget, for the counting and log families, in order.
pub fn conjecture_suite(configs: &[(u32, usize, u32, usize)], budget: u128) -> Result<ConjectureSuiteReport> {
    let mut report = ConjectureSuiteReport { configs: 0, sets_checked: 0, box_minimal: 0, counterexamples: Vec::new() };
    for &(t, n, k, threshold) in configs {
        for family in [TableFamily::Counting, TableFamily::Log] {
            let r = verify_conjecture(&ConjectureConfig { t, n, k, threshold, family, budget })?;
            report.configs += 1;
            report.sets_checked += r.sets_checked;
            match r.verdict {
                ConjectureVerdict::BoxMinimal => report.box_minimal += 1,
                ConjectureVerdict::Counterexample => report.counterexamples.push(r),
            }
        }
    }
    Ok(report)
}

/// The isoperimetry pipeline on random sets of a grid small enough for
/// exhaustive statistics. The threshold is clamped (the bounds are vacuous
/// at this scale), so the suite checks what still holds exactly: the
/// `extract_T` postcondition, `|T| = side^|I|` and that `T` does no worse
/// than its compressed box.
pub fn isoperimetry_suite(params: GridParams, count: usize, seed: u64) -> Result<SuiteReport> {
    let size = params.check_codec()?;
    let sets: Vec<GridSet> = (0..count as u64)
        .map(|j| {
            let mut rng = SharedRandomness::new(seed).stream("suite/isoperimetry", j);
            let log2_density = -((j % 8) as f64) - 1.0;
            let p = log2_density.exp2();
            let mut codes: Vec<u64> = (0..size).filter(|_| rng.random::<f64>() < p).collect();
            if codes.is_empty() {
                codes.push(rng.random_range(0..size));
            }
            GridSet::from_codes(params, codes)
        })
        .collect::<Result<_>>()?;
    let out = sets
        .par_iter()
        .map(|set| -> Result<Outcome> {
            let report = isoperimetry_pipeline(set, PipelineOptions { clamp_threshold: true })?;
            let mut out = Outcome { cases: 1, ..Outcome::default() };
            let expected = (report.witness.side as usize).pow(report.witness.coords.len() as u32);
            out.check(report.t_set.len() == expected, || {
                format!("|T| = {} but side^|I| = {expected} (|S| = {})", report.t_set.len(), set.len())
            });
            out.check(report.t_set.is_subset(set), || format!("T not inside S (|S| = {})", set.len()));
            out.check(report.compression_chain_holds, || format!("T does worse than its box (|S| = {})", set.len()));
            Ok(out)
        })
        .try_reduce(Outcome::default, |a, b| Ok(a.merge(b)))?;
    Ok(out.finish("isoperimetry"))
}
