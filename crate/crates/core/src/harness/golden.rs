//! Frozen transcript fixtures.
//!
//! Each case fixes a protocol, its parameters, an input seed and a protocol
//! seed. Rendering a case is deterministic, so the stored JSON must match
//! byte for byte. Any change to stream derivation, schedule constants or
//! the samplers shows up as a diff.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{run, SharedRandomness};
use crate::disjointness::{compute_schedule, run_sparse_disjointness, FolkloreOneRound, HwBaseline, KSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GoldenProtocol {
    Sparse { r: u32, c: f64, early_stop: bool },
    Folklore { hash_bits: u32 },
    Hw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoldenCase {
    pub name: &'static str,
    pub protocol: GoldenProtocol,
    pub k: usize,
    pub m: u64,
    pub intersecting: bool,
    pub seed: u64,
}

pub const GOLDEN_CASES: &[GoldenCase] = &[
    GoldenCase {
        name: "sparse_k16_r1_disjoint",
        protocol: GoldenProtocol::Sparse { r: 1, c: 2.0, early_stop: true },
        k: 16,
        m: 1 << 10,
        intersecting: false,
        seed: 1,
    },
    GoldenCase {
        name: "sparse_k64_r2_disjoint",
        protocol: GoldenProtocol::Sparse { r: 2, c: 2.0, early_stop: true },
        k: 64,
        m: 1 << 16,
        intersecting: false,
        seed: 7,
    },
    GoldenCase {
        name: "sparse_k256_r3_intersecting",
        protocol: GoldenProtocol::Sparse { r: 3, c: 2.0, early_stop: true },
        k: 256,
        m: 1 << 16,
        intersecting: true,
        seed: 42,
    },
    GoldenCase {
        name: "sparse_k1024_r3_no_early_stop",
        protocol: GoldenProtocol::Sparse { r: 3, c: 2.0, early_stop: false },
        k: 1024,
        m: 1 << 20,
        intersecting: false,
        seed: 2024,
    },
    GoldenCase {
        name: "folklore_k64_disjoint",
        protocol: GoldenProtocol::Folklore { hash_bits: 14 },
        k: 64,
        m: 1 << 16,
        intersecting: false,
        seed: 3,
    },
    GoldenCase {
        name: "hw_k64_disjoint",
        protocol: GoldenProtocol::Hw,
        k: 64,
        m: 1 << 16,
        intersecting: false,
        seed: 5,
    },
];

impl GoldenCase {
    pub fn file_name(&self) -> String {
        format!("{}.json", self.name)
    }

    /// Pretty transcript JSON with a trailing newline.
    pub fn render(&self) -> Result<String> {
        let mut rng = SharedRandomness::new(self.seed).stream("inputs", 0);
        let (a, b) = KSet::random_pair(self.m, self.k, self.intersecting, &mut rng)?;
        let transcript = match self.protocol {
            GoldenProtocol::Sparse { r, c, early_stop } => {
                let schedule = compute_schedule(self.k, r, c)?;
                run_sparse_disjointness(&a, &b, &schedule, self.seed, early_stop)?.transcript
            }
            GoldenProtocol::Folklore { hash_bits } => run(&FolkloreOneRound::new(self.k, hash_bits)?, &a, &b, self.seed)?.1,
            GoldenProtocol::Hw => run(&HwBaseline::new(self.k)?, &a, &b, self.seed)?.1,
        };
        Ok(transcript.to_json() + "\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenResult {
    pub name: String,
    pub matches: bool,
    /// Set when the stored file was missing or unreadable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
}

/// Directory holding the checked-in fixtures.
pub fn default_golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

/// Renders every case (in parallel) and compares with `dir`.
pub fn check_golden(dir: &Path) -> Result<Vec<GoldenResult>> {
    GOLDEN_CASES
        .par_iter()
        .map(|case| {
            let fresh = case.render()?;
            Ok(match fs::read_to_string(dir.join(case.file_name())) {
                Ok(stored) => GoldenResult { name: case.name.into(), matches: stored == fresh, problem: None },
                Err(e) => GoldenResult { name: case.name.into(), matches: false, problem: Some(e.to_string()) },
            })
        })
        .collect()
}

/// Rewrites the fixtures in `dir`.
pub fn write_golden(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::InvalidParameter(format!("{}: {e}", dir.display())))?;
    for case in GOLDEN_CASES {
        let path = dir.join(case.file_name());
        fs::write(&path, case.render()?).map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
