use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Bumped whenever a command changes its columns or their meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Provenance record written next to every output.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub artifact_version: String,
    pub schema_version: u32,
    pub columns: Vec<String>,
    pub timestamp: String,
    /// Arguments that reproduce the run, output flags removed.
    pub argv: Vec<String>,
    pub rng: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Value, seed: Option<u64>, columns: &[&str], argv: Vec<String>) -> Self {
        Self {
            command: command.to_string(),
            parameters,
            seed,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            argv,
            rng: seed.map(|_| frozen_mis::graphgen::RNG_ALGORITHM.to_string()),
        }
    }
}

/// Drops `--out`, `--manifest` and `--format` with their values.
pub fn replay_argv(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        let flag = a.split('=').next().unwrap_or("");
        if matches!(flag, "--out" | "--manifest" | "--format") {
            skip = !a.contains('=');
            continue;
        }
        out.push(a.clone());
    }
    out
}
