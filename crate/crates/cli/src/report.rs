//! Run reports, error classes and file output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Where the problem came from and its digest.
#[derive(Clone, Debug, Serialize)]
pub struct Inputs {
    pub source: String,
    pub problem_sha256: String,
    pub seed: u64,
}

impl Inputs {
    pub fn new(source: String, canonical: &[u8], seed: u64) -> Self {
        Inputs {
            source,
            problem_sha256: hex::encode(Sha256::digest(canonical)),
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Inputs>,
    pub results: Value,
    /// Per-phase wall time in milliseconds, only with `--timings` so that
    /// reports stay byte-identical across runs otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, u64>>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// A finished command: its report and whether its acceptance checks held.
pub struct Outcome {
    pub results: Value,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl Outcome {
    pub fn ok(results: impl Serialize, warnings: Vec<String>) -> Self {
        Outcome {
            results: serde_json::to_value(results).expect("results serialize"),
            warnings,
            passed: true,
        }
    }
}

/// Wall-clock phases of one run.
#[derive(Default)]
pub struct Timer {
    phases: BTreeMap<String, u64>,
}

impl Timer {
    pub fn time<R>(&mut self, phase: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        *self.phases.entry(phase.to_string()).or_default() += start.elapsed().as_millis() as u64;
        r
    }

    pub fn into_map(self) -> BTreeMap<String, u64> {
        self.phases
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Stable file-name fragment for a parameter value.
pub fn tag(c: f64) -> String {
    format!("{c}").replace('-', "m").replace('.', "p")
}
