//! Run outcomes, acceptance checks and the on-disk manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
}

/// One pass/fail comparison `value <relation> limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, limit: f64) -> Self {
        let passed = match relation {
            Relation::Le => value <= limit,
            Relation::Lt => value < limit,
            Relation::Ge => value >= limit,
            Relation::Gt => value > limit,
        };
        Self {
            name: name.into(),
            value,
            relation,
            limit,
            passed,
        }
    }

    pub fn le(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, Relation::Le, limit)
    }

    pub fn lt(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, Relation::Lt, limit)
    }

    pub fn ge(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, Relation::Ge, limit)
    }

    pub fn gt(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, Relation::Gt, limit)
    }

    pub fn describe(&self) -> String {
        let op = match self.relation {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        };
        format!(
            "{} {}: {:.6e} {op} {:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.limit
        )
    }
}

/// Everything a command produces before it touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Output files in write order.
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: serde_json::Value,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Serialize rows with a header line; floats use the shortest round-trip
/// form, so identical values give identical bytes.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| anyhow::anyhow!("csv buffer: {e}"))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the effective configuration in its canonical serialization.
pub fn config_hash(config: &RunConfig) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(config)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Provenance record written next to the outputs. Field order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub name: String,
    pub code_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub jobs: usize,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<FileEntry>,
    pub summary: serde_json::Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub config: RunConfig,
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Current UTC time, second resolution.
pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Write every output, the summary and the manifest under `root/<name>/`.
pub fn write_run(
    root: &Path,
    config: &RunConfig,
    outcome: &Outcome,
    started: String,
    jobs: usize,
) -> Result<(RunManifest, PathBuf)> {
    let dir = root.join(&config.name);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut outputs = Vec::new();
    let summary = json_bytes(&outcome.summary)?;
    let all = outcome
        .files
        .iter()
        .map(|(n, b)| (n.as_str(), b.as_slice()))
        .chain(std::iter::once((SUMMARY_FILE, summary.as_slice())));
    for (name, bytes) in all {
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(FileEntry {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
    }
    let manifest = RunManifest {
        schema_version: crate::config::SCHEMA_VERSION,
        command: config.experiment.verb().as_str().to_string(),
        name: config.name.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(config)?,
        seed: config.seed,
        jobs,
        started,
        finished: timestamp(),
        outputs,
        summary: outcome.summary.clone(),
        checks: outcome.checks.clone(),
        passed: outcome.passed(),
        config: config.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, json_bytes(&manifest)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok((manifest, dir))
}
