use serde::Serialize;

/// Bumped whenever a report field is renamed, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Envelope of every machine-readable report. `results` depends only on
/// `config` (which includes the seed); timing lives outside it.
#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub results: T,
    pub passed: bool,
    pub wall_clock_seconds: f64,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &str, config: serde_json::Value, results: T, passed: bool, wall_clock_seconds: f64) -> Self {
        Self { schema_version: SCHEMA_VERSION, command: command.to_string(), config, results, passed, wall_clock_seconds }
    }
}
