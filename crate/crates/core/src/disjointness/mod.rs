//! Sparse set disjointness: the scheduled r-round protocol, two baselines
//! and the exists-equal reduction.

mod iterlog;
mod kset;
mod protocol;
mod round;
mod schedule;

pub use iterlog::{iterated_exp, iterated_log, log_star};
pub use kset::KSet;
pub use protocol::{
    ee_to_disjointness, run_sparse_disjointness, FolkloreOneRound, HwBaseline, SparseDisjointness, SparseRun,
    HW_EXTRA_ROUNDS, HW_SLACK_A, HW_SLACK_B,
};
pub use round::{
    bernoulli_log2, error_signal_probability, exact_distribution_literal, exact_distribution_virtual,
    round_step_literal, round_step_virtual, OutcomeKey, RoundKind, RoundOutcome, LITERAL_BUDGET,
};
pub use schedule::{compute_schedule, Adjustment, RoundParams, Schedule};
