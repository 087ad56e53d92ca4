//! Experiment drivers shared by the command-line front end and the test
//! suites: Monte Carlo runners, parameter sweeps, verification suites,
//! golden transcripts and the report envelope.

pub mod golden;
pub mod report;
pub mod simulate;
pub mod stats;
pub mod suites;

pub use golden::{check_golden, default_golden_dir, write_golden, GoldenCase, GoldenResult, GOLDEN_CASES};
pub use report::{Report, SCHEMA_VERSION};
pub use simulate::{
    simulate_disjointness, simulate_exists_equal, sweep, DisjointnessConfig, DisjointnessSummary, ExistsEqualConfig,
    ExistsEqualSummary, InputKind, ProtocolChoice, SweepRow,
};
pub use stats::wald_ci95;
pub use suites::{
    all_subsets, conjecture_suite, default_downshift_sets, downshift_suite, isoperimetry_suite, list_lemma_suite,
    random_subsets, witness_suite, ConjectureSuiteReport, SuiteReport,
};
