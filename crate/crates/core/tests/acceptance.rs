//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints exactly one PASS/FAIL line, whatever the outcome.

use std::collections::BTreeSet;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sdisj_core::channel::{zero_round_baseline_error, zero_round_pr_disjoint_f64};
use sdisj_core::disjointness::{
    compute_schedule, exact_distribution_literal, exact_distribution_virtual, iterated_log, round_step_literal,
    round_step_virtual, KSet, RoundKind, RoundParams,
};
use sdisj_core::downshift::{verify_conjecture, ConjectureConfig, ConjectureVerdict, TableFamily, DEFAULT_SUBSET_BUDGET};
use sdisj_core::downshift::feasible_conjecture_configs;
use sdisj_core::embedding::{estimate_empty_rate, estimate_lemma_error, sample_nx_box, Draw, EmbeddingParams, LemmaCase};
use sdisj_core::harness::{
    check_golden, conjecture_suite, default_downshift_sets, default_golden_dir, downshift_suite, list_lemma_suite,
    random_subsets, simulate_disjointness, witness_suite, write_golden, DisjointnessConfig, InputKind, GOLDEN_CASES,
};
use sdisj_core::{GridParams, GridPoint};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1_one_sided() -> Check {
    let mut runs = 0;
    for k in [16usize, 64, 256] {
        for r in 1..=3 {
            let cfg = DisjointnessConfig::sparse(k, 1 << 16, r, 0xC1 + k as u64 * 10 + r as u64, 11_112)
                .with_inputs(InputKind::Intersecting);
            let s = simulate_disjointness(&cfg).map_err(|e| e.to_string())?;
            ensure(s.errors == 0, format!("k={k} r={r}: {} disjoint answers on intersecting inputs", s.errors))?;
            runs += s.trials;
        }
    }
    Ok(format!("{runs} intersecting runs, 0 disjoint answers"))
}

/// `ceil(log2(l + 1))` from an exact big integer when `log2 l` is integral.
fn oracle_bits(log2_l: f64) -> Option<u64> {
    (log2_l.fract() == 0.0).then(|| ((BigUint::one() << (log2_l as u64)) + BigUint::one()).bits())
}

fn c2_scaling() -> Check {
    let ks = [64usize, 256, 1024, 4096];
    let mut worst: f64 = 1.0;
    let mut oracle_checked = 0;
    for r in 1..=3u32 {
        let mut base = None;
        for &k in &ks {
            let cfg = DisjointnessConfig::sparse(k, 1 << 20, r, 0xC2, 200);
            let s = simulate_disjointness(&cfg).map_err(|e| e.to_string())?;
            ensure(s.accounting_mismatches == 0, format!("k={k} r={r}: width mismatch"))?;
            let schedule = compute_schedule(k, r, 2.0).map_err(|e| e.to_string())?;
            for round in &schedule.rounds {
                if let Some(bits) = oracle_bits(round.log2_l) {
                    ensure(bits == round.bits(), format!("k={k} r={r}: {} bits vs exact {bits}", round.bits()))?;
                    oracle_checked += 1;
                }
            }
            let ratio = s.bits.total / (k as f64 * iterated_log(r, k as f64).map_err(|e| e.to_string())?);
            let b = *base.get_or_insert(ratio);
            let factor = (ratio / b).max(b / ratio);
            worst = worst.max(factor);
            ensure(factor <= 2.0, format!("k={k} r={r}: ratio {ratio:.3} vs {b:.3} at k=64"))?;
        }
    }
    Ok(format!("max spread factor {worst:.3} across k; {oracle_checked} round widths match exact big-integer widths"))
}

fn c3_disjoint_error() -> Check {
    let k = 1024;
    let r = sdisj_core::disjointness::log_star(k as f64).map_err(|e| e.to_string())?;
    let big = simulate_disjointness(&DisjointnessConfig::sparse(k, 1 << 20, r, 0xC3, 10_000)).map_err(|e| e.to_string())?;
    ensure(big.errors == 0, format!("k=1024 r={r}: {} errors", big.errors))?;
    let small = simulate_disjointness(&DisjointnessConfig::sparse(64, 1 << 16, 2, 0xC3, 10_000)).map_err(|e| e.to_string())?;
    let bound = small.error_bound.unwrap_or(f64::NAN);
    ensure(small.error_rate < bound, format!("k=64 r=2: rate {} not below bound {bound}", small.error_rate))?;
    Ok(format!("k=1024 r={r}: 0/10000 errors; k=64 r=2: rate {} < bound {bound:.4}", small.error_rate))
}

fn c4_virtual_literal() -> Check {
    let sets: [&[u64]; 5] = [&[], &[1], &[1, 2], &[1, 2, 3], &[2, 5]];
    let targets: [&[u64]; 5] = [&[], &[1], &[3, 4], &[1, 4, 6], &[2, 5, 7]];
    let mut compared = 0;
    for (num, den) in [(1, 4), (1, 2)] {
        let p = BigRational::new(num.into(), den.into());
        for l in 1..=4u32 {
            for s in sets {
                for t in targets {
                    let s = KSet::new(8, s.to_vec()).unwrap();
                    let t = KSet::new(8, t.to_vec()).unwrap();
                    let v = exact_distribution_virtual(&s, &t, &p, l);
                    let lit = exact_distribution_literal(&s, &t, &p, l).map_err(|e| e.to_string())?;
                    ensure(v == lit, format!("p={num}/{den} l={l} S={:?} T={:?} differ", s.elements(), t.elements()))?;
                    compared += 1;
                }
            }
        }
    }
    // secondary: empirical total variation between the two samplers
    let params = RoundParams::new(0.5, 4).unwrap();
    let s = KSet::new(8, vec![1, 2]).unwrap();
    let t = KSet::new(8, vec![2, 3, 4]).unwrap();
    let trials = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut counts = std::collections::BTreeMap::<(bool, Vec<u64>), [u64; 2]>::new();
    for _ in 0..trials {
        let a = round_step_virtual(&s, &t, &params, &mut rng).unwrap();
        let b = round_step_literal(&s, &t, &params, &mut rng).unwrap();
        counts.entry((a.kind == RoundKind::ErrorSignal, a.receiver_set.elements().to_vec())).or_default()[0] += 1;
        counts.entry((b.kind == RoundKind::ErrorSignal, b.receiver_set.elements().to_vec())).or_default()[1] += 1;
    }
    let tv: f64 = counts.values().map(|[a, b]| (*a as f64 - *b as f64).abs()).sum::<f64>() / (2.0 * trials as f64);
    ensure(tv <= 0.02, format!("Monte Carlo total variation {tv}"))?;
    Ok(format!("{compared} exact distributions identical (discrepancy 0); sampled TV {tv:.4}"))
}

fn c5_downshift() -> Check {
    let sets = default_downshift_sets(0xC5).map_err(|e| e.to_string())?;
    let r = downshift_suite(&sets);
    ensure(r.passed, format!("{} failures, first: {:?}", r.failure_count, r.failures.first()))?;
    let big = random_subsets(GridParams::new(4, 4).unwrap(), 1000, 0xC5, "suite/witness").map_err(|e| e.to_string())?;
    let w = witness_suite(&big);
    ensure(w.passed, format!("witness failures: {:?}", w.failures.first()))?;
    Ok(format!("{} sets, {} checks, 0 failures; witness found for {} random subsets of [4]^4", r.cases, r.checks, w.cases))
}

fn c6_list_lemma() -> Check {
    let r = list_lemma_suite().map_err(|e| e.to_string())?;
    ensure(r.passed, format!("{} violations, first: {:?}", r.failure_count, r.failures.first()))?;
    Ok(format!("{} (set, M, f) cases, {} checks, 0 violations", r.cases, r.checks))
}

fn binom(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn c7_conjecture() -> Check {
    let counting = verify_conjecture(&ConjectureConfig {
        t: 3,
        n: 2,
        k: 2,
        threshold: 1,
        family: TableFamily::Counting,
        budget: DEFAULT_SUBSET_BUDGET,
    })
    .map_err(|e| e.to_string())?;
    ensure(counting.sets_checked == 126, format!("{} sets checked", counting.sets_checked))?;
    ensure(counting.verdict == ConjectureVerdict::BoxMinimal, "counting: box not minimal at (3,2,2,1)")?;
    let configs = feasible_conjecture_configs(DEFAULT_SUBSET_BUDGET);
    let suite = conjecture_suite(&configs, DEFAULT_SUBSET_BUDGET).map_err(|e| e.to_string())?;
    let expected: u128 = configs
        .iter()
        .map(|&(t, n, k, _)| 2 * binom((t as u128).pow(n as u32), (k as u128).pow(n as u32)))
        .sum();
    ensure(suite.sets_checked == expected, format!("enumerated {} of {expected} subsets", suite.sets_checked))?;
    let artifact = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("conjecture_counterexamples.json");
    std::fs::write(&artifact, serde_json::to_string_pretty(&suite.counterexamples).unwrap()).map_err(|e| e.to_string())?;
    let found: BTreeSet<String> = suite
        .counterexamples
        .iter()
        .map(|c| format!("(t={},n={},k={},M={},{})", c.params.t, c.params.n, c.params.k, c.params.threshold, c.params.family))
        .collect();
    Ok(format!(
        "{} configurations, {} subsets enumerated, {} box-minimal, {} counterexamples {:?} written to {}",
        suite.configs,
        suite.sets_checked,
        suite.box_minimal,
        suite.counterexamples.len(),
        found,
        artifact.display()
    ))
}

fn c8_isoperimetry() -> Check {
    let params = EmbeddingParams::desk();
    let r = estimate_empty_rate(&params, 100_000, 0xC8).map_err(|e| e.to_string())?;
    ensure(r.empty_events == 0, format!("{} empty events", r.empty_events))?;
    ensure(r.verdict, "rate exceeds 5^-M + CI")?;
    // h < M forced: every coordinate of I above the box side
    let tbox = params.box_t();
    let mut x = vec![1u32; params.n];
    for v in x.iter_mut().take(params.i_size) {
        *v = params.k + 1;
    }
    let x = GridPoint::new(x);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    ensure(sample_nx_box(&x, &tbox, params.threshold, &mut rng) == Draw::Sentinel, "forced h=0 did not yield sentinel")?;
    Ok(format!("0/100000 empty events (bound 5^-20 = {:.2e}); mean h {:.2} vs {:.0}", r.bound, r.observed_mean_h, r.mean_h))
}

fn c9_lemma_error() -> Check {
    let params = EmbeddingParams::desk();
    let m0 = estimate_lemma_error(&params, LemmaCase::Match0, 100_000, 0xC9, false).map_err(|e| e.to_string())?;
    ensure(m0.verdict, format!("match0 estimate {} <= 0.77 - {}", m0.estimate, m0.ci95))?;
    ensure(m0.within_3_sigma == Some(true), format!("match0 {} not within 3 sigma of {:?}", m0.estimate, m0.exact))?;
    let mr = estimate_lemma_error(&params, LemmaCase::MatchR, 100_000, 0xC9, false).map_err(|e| e.to_string())?;
    ensure(mr.verdict, format!("matchR estimate {} < 0.80 - {}", mr.estimate, mr.ci95))?;
    Ok(format!(
        "match0 {:.4} ± {:.4} (exact {:.4}); matchR {:.4} ± {:.4}",
        m0.estimate,
        m0.ci95,
        m0.exact.unwrap_or(f64::NAN),
        mr.estimate,
        mr.ci95
    ))
}

fn c10_zero_round() -> Check {
    let three_quarters = BigRational::new(3.into(), 4.into());
    let bound = BigRational::new(22.into(), 100.into());
    for n in 1..=64u64 {
        let b = zero_round_baseline_error(n).map_err(|e| e.to_string())?;
        ensure(b.error >= bound, format!("n={n}: exact error below 0.22"))?;
        ensure(b.pr_disjoint >= three_quarters, format!("n={n}: Pr below 3/4"))?;
        let diff = (b.pr_disjoint.clone() - BigRational::from_float(zero_round_pr_disjoint_f64(n)).unwrap()).abs();
        ensure(diff < BigRational::new(1.into(), (1u64 << 40).into()), format!("n={n}: float evaluation off"))?;
        ensure(!b.error.is_zero(), "zero error")?;
    }
    let mut min_error = f64::INFINITY;
    let mut max_pr: f64 = 0.0;
    for n in 1..=1_000_000u64 {
        let p = zero_round_pr_disjoint_f64(n);
        max_pr = max_pr.max(p);
        min_error = min_error.min(p.min(1.0 - p));
    }
    ensure(min_error >= 0.22 + 1e-6, format!("min error {min_error}"))?;
    ensure(max_pr < 0.78, format!("max Pr[EE=0] {max_pr}"))?;
    let exact_1e3 = zero_round_baseline_error(1000).unwrap().pr_disjoint.to_f64().unwrap();
    Ok(format!("min error {min_error:.5} over n <= 10^6; Pr[EE=0] in [0.75, {max_pr:.5}]; exact n=1000: {exact_1e3:.6}"))
}

fn c11_golden() -> Check {
    let dir = default_golden_dir();
    if std::env::var("UPDATE_GOLDEN").is_ok_and(|v| v == "1") {
        write_golden(&dir).map_err(|e| e.to_string())?;
    }
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let first = one.install(|| check_golden(&dir)).map_err(|e| e.to_string())?;
    let second = many.install(|| check_golden(&dir)).map_err(|e| e.to_string())?;
    for r in first.iter().chain(&second) {
        ensure(r.matches, format!("{} differs from stored transcript ({:?})", r.name, r.problem))?;
    }
    let cfg = DisjointnessConfig::sparse(64, 1 << 16, 2, 0xC11, 2_000);
    let a = one.install(|| simulate_disjointness(&cfg)).map_err(|e| e.to_string())?;
    let b = many.install(|| simulate_disjointness(&cfg)).map_err(|e| e.to_string())?;
    ensure(
        serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap(),
        "simulation summary depends on thread count",
    )?;
    Ok(format!("{} golden transcripts byte-identical on 1 and 4 threads; summaries identical", GOLDEN_CASES.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("one-sided correctness", c1_one_sided),
        ("communication scaling", c2_scaling),
        ("disjoint-input error", c3_disjoint_error),
        ("virtual/literal sampler equivalence", c4_virtual_literal),
        ("downshift suite", c5_downshift),
        ("list lemma exhaustive", c6_list_lemma),
        ("product conjecture verifier", c7_conjecture),
        ("isoperimetry empty-ball rate", c8_isoperimetry),
        ("embedding error constants", c9_lemma_error),
        ("zero-round baseline", c10_zero_round),
        ("reproducibility", c11_golden),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (idx, (name, run)) in criteria.iter().enumerate() {
        let id = idx + 1;
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS [{name}] {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL [{name}] {detail} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
