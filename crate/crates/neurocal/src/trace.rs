//! Sampler trace and checkpoint files.
//!
//! `trace.jsonl` holds one [`TraceLine`] per completed iteration.
//! `checkpoint.json` holds the full sampler state after the latest
//! iteration plus a fingerprint of the problem it belongs to. The checkpoint
//! is replaced atomically, so a killed run always leaves a consistent pair.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use neurocal_core::smcabc::{IterationRecord, SmcState};
use serde::{Deserialize, Serialize};

use crate::error::invalid;

pub const TRACE_SCHEMA: u32 = 1;
pub const TRACE_FILE: &str = "trace.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub schema: u32,
    #[serde(flatten)]
    pub record: IterationRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: u32,
    /// Identifies the configuration, observed data and seed.
    pub fingerprint: String,
    pub state: SmcState,
}

pub struct TraceWriter {
    dir: PathBuf,
    fingerprint: String,
    file: File,
    written: usize,
}

impl TraceWriter {
    /// Starts a fresh trace, or rewrites it from `resume` so the file
    /// matches the checkpoint exactly.
    pub fn create(dir: &Path, fingerprint: &str, resume: Option<&SmcState>) -> Result<Self> {
        let path = dir.join(TRACE_FILE);
        let mut file =
            File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut written = 0;
        if let Some(state) = resume {
            for r in &state.records {
                write_line(&mut file, r)?;
                written += 1;
            }
        }
        file.flush()?;
        Ok(TraceWriter {
            dir: dir.to_path_buf(),
            fingerprint: fingerprint.to_string(),
            file,
            written,
        })
    }

    /// Appends the records not yet on disk and replaces the checkpoint.
    pub fn record(&mut self, state: &SmcState) -> Result<()> {
        for r in &state.records[self.written..] {
            write_line(&mut self.file, r)?;
        }
        self.written = state.records.len();
        self.file.flush()?;
        self.file.sync_data()?;
        let cp = Checkpoint {
            schema: TRACE_SCHEMA,
            fingerprint: self.fingerprint.clone(),
            state: state.clone(),
        };
        write_atomic(
            &self.dir.join(CHECKPOINT_FILE),
            serde_json::to_string(&cp)?.as_bytes(),
        )
    }
}

fn write_line(file: &mut File, record: &IterationRecord) -> Result<()> {
    let line = TraceLine {
        schema: TRACE_SCHEMA,
        record: record.clone(),
    };
    serde_json::to_writer(&mut *file, &line)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = OpenOptions::new()
            .write(true)
            .create(true)
            .truncate(true)
            .open(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("replacing {}", path.display()))
}

/// Loads a checkpoint if one exists. A checkpoint from a different problem
/// is an input error.
pub fn load_checkpoint(dir: &Path, fingerprint: &str) -> Result<Option<SmcState>> {
    let path = dir.join(CHECKPOINT_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let cp: Checkpoint =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if cp.schema != TRACE_SCHEMA {
        return Err(invalid(format!(
            "{}: unsupported schema {}",
            path.display(),
            cp.schema
        ))
        .into());
    }
    if cp.fingerprint != fingerprint {
        return Err(invalid(format!(
            "{} belongs to a different configuration, observed data or seed",
            path.display()
        ))
        .into());
    }
    Ok(Some(cp.state))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceLine>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    BufReader::new(f)
        .lines()
        .map(|l| Ok(serde_json::from_str(&l?)?))
        .collect()
}
