//! Append-only newline-delimited run ledger with a durable checkpoint.
//! Records serialize with a fixed field order, so two runs that produce the
//! same records produce the same bytes.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::design::TrialDescriptor;

use super::parse::ParsedOutcome;
use super::provider::ProviderStamp;
use super::RunnerError;

pub const LEDGER_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLedgerRecord {
    pub schema_version: u32,
    pub trial: TrialDescriptor,
    /// SHA-256 of the rendered prompt text actually sent.
    pub prompt_sha256: String,
    /// Wall-clock request time; omitted for deterministic providers so that
    /// replayed runs are byte-identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requested_at: Option<String>,
    pub attempts: u32,
    pub outcome: ParsedOutcome,
    pub provider: ProviderStamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub records: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_trial_key: Option<String>,
}

pub fn checkpoint_path(ledger_path: &Path) -> PathBuf {
    let mut name = ledger_path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".checkpoint");
    ledger_path.with_file_name(name)
}

fn io_err(path: &Path, source: std::io::Error) -> RunnerError {
    RunnerError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Serialized single writer. Appends go through a buffer; `checkpoint` makes
/// everything written so far durable and bumps the watermark file.
pub struct LedgerWriter {
    out: BufWriter<File>,
    path: PathBuf,
    written: usize,
    last_key: Option<String>,
}

impl LedgerWriter {
    /// Opens for append. `existing` is the number of records already present
    /// (0 for a fresh run); the count seeds the checkpoint watermark.
    pub fn open(path: &Path, existing: usize) -> Result<LedgerWriter, RunnerError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        Ok(LedgerWriter {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
            written: existing,
            last_key: None,
        })
    }

    pub fn append(&mut self, record: &RunLedgerRecord) -> Result<(), RunnerError> {
        let line = serde_json::to_string(record).map_err(|e| RunnerError::Serialize {
            context: format!("ledger record {}", record.trial.trial_key),
            message: e.to_string(),
        })?;
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| io_err(&self.path, e))?;
        self.written += 1;
        self.last_key = Some(record.trial.trial_key.clone());
        Ok(())
    }

    pub fn records_written(&self) -> usize {
        self.written
    }

    /// Flushes, syncs the ledger to disk, then atomically replaces the
    /// checkpoint file. A crash between the two leaves a stale (conservative)
    /// watermark, never a forward one.
    pub fn checkpoint(&mut self) -> Result<(), RunnerError> {
        self.out.flush().map_err(|e| io_err(&self.path, e))?;
        self.out
            .get_ref()
            .sync_data()
            .map_err(|e| io_err(&self.path, e))?;
        let cp = Checkpoint {
            schema_version: LEDGER_SCHEMA_VERSION,
            records: self.written,
            last_trial_key: self.last_key.clone(),
        };
        let cp_path = checkpoint_path(&self.path);
        let tmp = cp_path.with_extension("checkpoint.tmp");
        let body = serde_json::to_string_pretty(&cp).map_err(|e| RunnerError::Serialize {
            context: "checkpoint".into(),
            message: e.to_string(),
        })?;
        std::fs::write(&tmp, body).map_err(|e| io_err(&tmp, e))?;
        std::fs::rename(&tmp, &cp_path).map_err(|e| io_err(&cp_path, e))?;
        Ok(())
    }
}

/// Reads and validates a whole ledger. Schema-version mismatches and parse
/// failures carry the offending line number.
pub fn read_ledger(path: &Path) -> Result<Vec<RunLedgerRecord>, RunnerError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RunLedgerRecord =
            serde_json::from_str(&line).map_err(|e| RunnerError::LedgerParse {
                path: path.display().to_string(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        if record.schema_version != LEDGER_SCHEMA_VERSION {
            return Err(RunnerError::SchemaVersion {
                found: record.schema_version,
                expected: LEDGER_SCHEMA_VERSION,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn read_checkpoint(ledger_path: &Path) -> Result<Option<Checkpoint>, RunnerError> {
    let cp_path = checkpoint_path(ledger_path);
    let body = match std::fs::read_to_string(&cp_path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(&cp_path, e)),
    };
    let cp: Checkpoint = serde_json::from_str(&body).map_err(|e| RunnerError::LedgerParse {
        path: cp_path.display().to_string(),
        line: 1,
        message: e.to_string(),
    })?;
    Ok(Some(cp))
}
