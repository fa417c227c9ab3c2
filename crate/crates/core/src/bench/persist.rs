//! Result-log persistence.
//!
//! The log is line-delimited: each line is a hex SHA-256 digest, one
//! space, then the record as a single JSON object. The digest covers
//! the exact JSON bytes, so truncated or edited lines are detected on
//! load. Records are written in a canonical order and all map keys
//! are sorted, which makes logs from identical runs byte-identical.
//! Wall-clock timings vary between runs, so they live in a separate
//! sidecar file that is excluded from identity comparisons.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::runner::{DownstreamKind, FsMethod};
use super::BenchError;

/// Bumped when [`ResultRecord`] changes shape.
pub const SCHEMA_VERSION: u32 = 1;

/// Which stage of an experiment produced a record. Search trials tune
/// hyperparameters on validation data; final runs re-train the best
/// trial across seeds and are the only records with test metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Phase {
    Search { trial: usize },
    Final { seed_index: usize },
}

/// One pipeline execution. Failed runs keep their error text and have
/// no metrics; `scores` holds the per-feature importances of final
/// runs for methods that produce them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    /// SHA-256 of the experiment config, the dedup key for appends.
    pub config_hash: String,
    pub config_name: String,
    pub dataset: String,
    /// Augmentation label like "random-0.5", or "none".
    pub setup: String,
    pub fs_method: FsMethod,
    pub downstream: DownstreamKind,
    pub phase: Phase,
    /// Seed that drove this run's streams.
    pub seed: u64,
    pub hyperparams: BTreeMap<String, f64>,
    /// Ascending column indices kept for the downstream model.
    pub selected: Vec<usize>,
    pub n_original: usize,
    pub m_total: usize,
    /// Validation metric, oriented so higher is better.
    pub val_metric: Option<f64>,
    /// Test metric; only final runs ever have one.
    pub test_metric: Option<f64>,
    pub scores: Option<Vec<f64>>,
    pub error: Option<String>,
}

impl ResultRecord {
    /// Canonical log order: by config, then search trials before
    /// final runs, each in index order.
    fn sort_key(&self) -> (String, String, Phase) {
        (
            self.config_name.clone(),
            self.config_hash.clone(),
            self.phase,
        )
    }
}

/// Per-run wall times, stored apart from the deterministic records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub config_hash: String,
    pub phase: Phase,
    pub fs_seconds: f64,
    pub train_seconds: f64,
}

fn checksum_line(json: &str) -> String {
    let digest = Sha256::digest(json.as_bytes());
    let mut line = String::with_capacity(json.len() + 65);
    for byte in digest {
        line.push_str(&format!("{byte:02x}"));
    }
    line.push(' ');
    line.push_str(json);
    line
}

fn render(records: &[ResultRecord]) -> Result<String, BenchError> {
    let mut sorted: Vec<&ResultRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.sort_key());
    let mut out = String::new();
    for record in sorted {
        let json = serde_json::to_string(record)?;
        out.push_str(&checksum_line(&json));
        out.push('\n');
    }
    Ok(out)
}

/// Writes `records` to `path`, replacing any existing file.
pub fn write_records(path: &Path, records: &[ResultRecord]) -> Result<(), BenchError> {
    fs::write(path, render(records)?)?;
    Ok(())
}

/// Appends records whose config hash is not already in the log, so
/// re-running a suite into the same file is idempotent.
pub fn append_records(path: &Path, records: &[ResultRecord]) -> Result<usize, BenchError> {
    let existing: BTreeSet<String> = if path.exists() {
        load_records(path)?
            .into_iter()
            .map(|r| r.config_hash)
            .collect()
    } else {
        BTreeSet::new()
    };
    let fresh: Vec<ResultRecord> = records
        .iter()
        .filter(|r| !existing.contains(&r.config_hash))
        .cloned()
        .collect();
    if !fresh.is_empty() {
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        file.write_all(render(&fresh)?.as_bytes())?;
    }
    Ok(fresh.len())
}

/// Reads a log back, verifying every line's checksum and schema
/// version.
pub fn load_records(path: &Path) -> Result<Vec<ResultRecord>, BenchError> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        if raw.is_empty() {
            continue;
        }
        let (digest, json) = raw.split_once(' ').ok_or(BenchError::Corrupt { line })?;
        let expect = format!("{:x}", Sha256::digest(json.as_bytes()));
        if digest != expect {
            return Err(BenchError::Corrupt { line });
        }
        let record: ResultRecord =
            serde_json::from_str(json).map_err(|e| BenchError::BadRecord {
                line,
                reason: e.to_string(),
            })?;
        if record.schema_version != SCHEMA_VERSION {
            return Err(BenchError::BadRecord {
                line,
                reason: format!(
                    "schema version {} (this build reads {})",
                    record.schema_version, SCHEMA_VERSION
                ),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Writes the timing sidecar, one JSON object per line.
pub fn write_timings(path: &Path, timings: &[TimingRecord]) -> Result<(), BenchError> {
    let mut out = String::new();
    for timing in timings {
        out.push_str(&serde_json::to_string(timing)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
