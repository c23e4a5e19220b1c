//! Append-only JSONL log with one entry per (problem, strategy, repeat).

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use mot_core::exec::ExecReport;
use mot_core::metrics::ProblemOutcome;
use mot_core::strategy::{GenerationRecord, StrategyId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    /// The candidate ran; `outcome` holds the verdict.
    Evaluated,
    /// The strategy produced no candidate. Counted as unsolved.
    GenerationFailed,
    /// The provider or the executor failed. Excluded from metrics.
    InfraFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub task_id: String,
    pub strategy: StrategyId,
    #[serde(default)]
    pub repeat: u32,
    pub status: EntryStatus,
    /// Calls, prompts, responses, usage, parsed graph and extracted code.
    pub record: Option<GenerationRecord>,
    pub exec_report: Option<ExecReport>,
    pub outcome: Option<ProblemOutcome>,
    pub error: Option<String>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunLogEntry {
    pub fn key(&self) -> (String, StrategyId, u32) {
        (self.task_id.clone(), self.strategy, self.repeat)
    }

    /// Whether a resumed run may skip this pair.
    pub fn is_final(&self) -> bool {
        self.status != EntryStatus::InfraFailure
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("run log {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("run log {path}, line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

pub struct RunLogWriter {
    path: PathBuf,
    file: File,
}

impl RunLogWriter {
    pub fn append_to(path: &Path) -> Result<Self, LogError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| LogError::Io { path: path.to_path_buf(), source })?;
        Ok(Self { path: path.to_path_buf(), file })
    }

    pub fn append(&mut self, entry: &RunLogEntry) -> Result<(), LogError> {
        let mut line = serde_json::to_string(entry).expect("log entries serialize");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|source| LogError::Io { path: self.path.clone(), source })
    }
}

/// Reads every entry. A torn final line, as left by a crash mid-write, is
/// skipped; damage anywhere else is an error.
pub fn read_log(path: &Path) -> Result<Vec<RunLogEntry>, LogError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => return Err(LogError::Io { path: path.to_path_buf(), source }),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|source| LogError::Io { path: path.to_path_buf(), source })?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut entries = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(e) => entries.push(e),
            Err(e) if Some(i) == last => {
                log::warn!("{}: ignoring torn final line: {e}", path.display());
            }
            Err(e) => {
                return Err(LogError::Corrupt { path: path.to_path_buf(), line: i + 1, message: e.to_string() });
            }
        }
    }
    Ok(entries)
}
