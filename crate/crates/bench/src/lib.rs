//! Criterion benchmarks for `sdisj-core`; see `benches/core.rs`.
