//! `sdisj`: runs the protocol simulations and verification suites and emits
//! versioned JSON (or CSV) reports.
//!
//! Exit codes: 0 on success, 1 on usage or runtime errors, 2 when a
//! verification ran to completion but did not pass.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sdisj_core::downshift::{verify_conjecture, ConjectureConfig, ConjectureVerdict, TableFamily, DEFAULT_SUBSET_BUDGET};
use sdisj_core::embedding::{estimate_empty_rate, estimate_lemma_error, EmbeddingParams, LemmaCase};
use sdisj_core::harness::{
    all_subsets, default_downshift_sets, downshift_suite, isoperimetry_suite, list_lemma_suite, random_subsets,
    simulate_disjointness, simulate_exists_equal, sweep, DisjointnessConfig, ExistsEqualConfig, InputKind,
    ProtocolChoice, Report,
};
use sdisj_core::GridParams;

use output::Format;

#[derive(Parser)]
#[command(name = "sdisj", version, about = "Sparse disjointness protocols and grid isoperimetry verifiers")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed for all shared randomness.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 lets the runtime decide).
    #[arg(long, global = true, env = "SDISJ_JOBS", default_value_t = 0)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Sparse,
    Folklore,
    Hw,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbeddingCase {
    Match0,
    #[value(name = "matchR", alias = "matchr")]
    MatchR,
    /// Frequency of `N_X` being empty.
    Empty,
}

#[derive(Subcommand)]
enum Command {
    /// Run a disjointness protocol on random k-sparse inputs.
    SimulateDisjointness {
        #[arg(long)]
        k: usize,
        /// Universe size; defaults to max(2^16, 4k).
        #[arg(long)]
        m: Option<u64>,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, value_enum, default_value_t = ProtocolArg::Sparse)]
        protocol: ProtocolArg,
        /// Hash width for the one-round protocol.
        #[arg(long, default_value_t = 32)]
        hash_bits: u32,
        #[arg(long, default_value = "disjoint")]
        inputs: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Run every scheduled round even after a party's set empties.
        #[arg(long)]
        no_early_stop: bool,
    },
    /// Exists-equal on uniform inputs in [4n]^n through the disjointness reduction.
    SimulateExistsEqual {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long)]
        no_early_stop: bool,
    },
    /// Down-shift invariants on every subset (t^n <= 16) or on random subsets.
    VerifyDownshift {
        /// Grid side; omit together with --n for the default workload.
        #[arg(long, requires = "n")]
        t: Option<u32>,
        #[arg(long, requires = "t")]
        n: Option<usize>,
        /// Random subsets to draw when the grid has more than 16 points.
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Exhaustive list-lemma check on [2]^2 and [2]^3.
    VerifyListLemma,
    /// Exhaustive search for a k^n-subset of [t]^n with smaller perimeter than the box.
    VerifyConjecture {
        #[arg(long)]
        t: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: u32,
        #[arg(long = "M")]
        threshold: usize,
        /// Concave function: counting, log or empty-indicator.
        #[arg(long = "f", default_value = "counting")]
        family: String,
        /// Largest number of subsets to enumerate.
        #[arg(long, default_value_t = DEFAULT_SUBSET_BUDGET)]
        budget: u128,
    },
    /// Box witness, T extraction and compression chain on random sets.
    VerifyIsoperimetry {
        #[arg(long, default_value_t = 4)]
        t: u32,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        count: usize,
    },
    /// Monte Carlo error of the exists-equal embedding.
    EstimateEmbeddingError {
        #[arg(long, value_enum)]
        case: EmbeddingCase,
        /// JSON preset with n, M, R, k; defaults to the bundled desk preset.
        #[arg(long)]
        preset: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Use X itself instead of the sampled X'.
        #[arg(long)]
        bypass: bool,
    },
    /// Bits per k log^(r) k across a grid of (k, r).
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = vec![64usize, 256, 1024, 4096])]
        ks: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 2, 3])]
        rs: Vec<u32>,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
    },
}

fn emit<T: Serialize>(common: &Common, report: &Report<T>) -> Result<()> {
    match common.format {
        Format::Json => output::write_json(report, common.out.as_deref()),
        Format::Csv => output::write_flat(report, common.out.as_deref()),
    }
}

fn finish<T: Serialize>(common: &Common, name: &str, config: serde_json::Value, results: T, passed: bool, start: Instant) -> Result<bool> {
    emit(common, &Report::new(name, config, results, passed, start.elapsed().as_secs_f64()))?;
    Ok(passed)
}

fn execute(cli: Cli) -> Result<bool> {
    let common = &cli.common;
    if common.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(common.jobs).build_global().context("building thread pool")?;
    }
    let start = Instant::now();
    let seed = common.seed;
    match cli.command {
        Command::SimulateDisjointness { k, m, r, c, protocol, hash_bits, inputs, trials, no_early_stop } => {
            let inputs = match inputs.as_str() {
                "disjoint" => InputKind::Disjoint,
                "intersecting" => InputKind::Intersecting,
                other => bail!("--inputs must be disjoint or intersecting, got {other:?}"),
            };
            let protocol = match protocol {
                ProtocolArg::Sparse => ProtocolChoice::Sparse,
                ProtocolArg::Folklore => ProtocolChoice::Folklore { hash_bits },
                ProtocolArg::Hw => ProtocolChoice::Hw,
            };
            let cfg = DisjointnessConfig {
                protocol,
                k,
                m: m.unwrap_or_else(|| (1u64 << 16).max(4 * k as u64)),
                r,
                c,
                seed,
                trials,
                early_stop: !no_early_stop,
                inputs,
            };
            let s = simulate_disjointness(&cfg)?;
            // Intersecting inputs must never be called disjoint.
            let passed = inputs == InputKind::Disjoint || s.errors == 0;
            finish(common, "simulate-disjointness", serde_json::to_value(cfg)?, s, passed, start)
        }
        Command::SimulateExistsEqual { n, r, c, trials, no_early_stop } => {
            let cfg = ExistsEqualConfig { n, r, c, seed, trials, early_stop: !no_early_stop };
            let s = simulate_exists_equal(&cfg)?;
            let passed = s.one_sided_violations == 0;
            finish(common, "simulate-exists-equal", serde_json::to_value(cfg)?, s, passed, start)
        }
        Command::VerifyDownshift { t, n, count } => {
            let (sets, config) = match (t, n) {
                (Some(t), Some(n)) => {
                    let params = GridParams::new(t, n)?;
                    let exhaustive = params.size().is_some_and(|s| s <= 16);
                    let sets = if exhaustive {
                        all_subsets(params)?
                    } else {
                        random_subsets(params, count, seed, "suite/downshift")?
                    };
                    (sets, serde_json::json!({ "t": t, "n": n, "exhaustive": exhaustive, "count": count, "seed": seed }))
                }
                _ => (default_downshift_sets(seed)?, serde_json::json!({ "workload": "default", "seed": seed })),
            };
            let r = downshift_suite(&sets);
            let passed = r.passed;
            finish(common, "verify-downshift", config, r, passed, start)
        }
        Command::VerifyListLemma => {
            let r = list_lemma_suite()?;
            let passed = r.passed;
            finish(common, "verify-list-lemma", serde_json::json!({ "grids": ["[2]^2", "[2]^3"], "M": [1, 2] }), r, passed, start)
        }
        Command::VerifyConjecture { t, n, k, threshold, family, budget } => {
            let family: TableFamily = family.parse()?;
            let cfg = ConjectureConfig { t, n, k, threshold, family, budget };
            let r = verify_conjecture(&cfg)?;
            let passed = r.verdict == ConjectureVerdict::BoxMinimal;
            finish(common, "verify-conjecture", serde_json::to_value(cfg)?, r, passed, start)
        }
        Command::VerifyIsoperimetry { t, n, count } => {
            let r = isoperimetry_suite(GridParams::new(t, n)?, count, seed)?;
            let passed = r.passed;
            finish(common, "verify-isoperimetry", serde_json::json!({ "t": t, "n": n, "count": count, "seed": seed }), r, passed, start)
        }
        Command::EstimateEmbeddingError { case, preset, trials, bypass } => {
            let params = match &preset {
                Some(path) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    EmbeddingParams::from_json(&text)?
                }
                None => EmbeddingParams::desk(),
            };
            let mut config = serde_json::to_value(params)?;
            config["seed"] = seed.into();
            config["trials"] = trials.into();
            config["bypass"] = bypass.into();
            let lemma = |case: LemmaCase| estimate_lemma_error(&params, case, trials, seed, bypass);
            match case {
                EmbeddingCase::Match0 | EmbeddingCase::MatchR => {
                    let case = if matches!(case, EmbeddingCase::Match0) { LemmaCase::Match0 } else { LemmaCase::MatchR };
                    config["case"] = case.to_string().into();
                    let r = lemma(case)?;
                    let passed = r.verdict;
                    finish(common, "estimate-embedding-error", config, r, passed, start)
                }
                EmbeddingCase::Empty => {
                    config["case"] = "empty".into();
                    let r = estimate_empty_rate(&params, trials, seed)?;
                    let passed = r.verdict;
                    finish(common, "estimate-embedding-error", config, r, passed, start)
                }
            }
        }
        Command::Sweep { ks, rs, trials, c } => {
            let rows = sweep(&ks, &rs, trials, seed, c)?;
            match common.format {
                Format::Csv => output::write_rows(&rows, common.out.as_deref())?,
                Format::Json => {
                    let config = serde_json::json!({ "ks": ks, "rs": rs, "trials": trials, "c": c, "seed": seed });
                    emit(common, &Report::new("sweep", config, &rows, true, start.elapsed().as_secs_f64()))?;
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
