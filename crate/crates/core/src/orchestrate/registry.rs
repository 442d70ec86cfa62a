//! Append-only run journal. Each line records one status change; the latest
//! line for a run id is its current state.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::plan::ExperimentPlan;
use super::validate::{validate_interchange, InterchangeKind};
use crate::error::{Error, Result};
use crate::eval::io::parse_jsonl;

pub const REGISTRY_FILE: &str = "registry.jsonl";
pub const SNAPSHOT_FILE: &str = "registry.snapshot.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Planned,
    Scored,
    Reported,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifacts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predictions: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub results: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub status: RunStatus,
    #[serde(default)]
    pub artifacts: Artifacts,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Handle on a journal file. Writes append one line and flush; there is a
/// single writer per journal.
#[derive(Debug, Clone)]
pub struct Registry {
    path: PathBuf,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Registry {
    pub fn open(path: impl Into<PathBuf>) -> Self {
        Registry { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn entries(&self) -> Result<Vec<RunRecord>> {
        match fs::read_to_string(&self.path) {
            Ok(text) => parse_jsonl(&text, &self.path.display().to_string()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(Error::io(&self.path, e)),
        }
    }

    /// Latest record per run id.
    pub fn snapshot(&self) -> Result<BTreeMap<String, RunRecord>> {
        let mut out = BTreeMap::new();
        for r in self.entries()? {
            out.insert(r.run_id.clone(), r);
        }
        Ok(out)
    }

    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        let snapshot: Vec<RunRecord> = self.snapshot()?.into_values().collect();
        crate::eval::io::write_json(path, &snapshot)
    }

    fn append(&self, records: &[RunRecord]) -> Result<()> {
        if records.is_empty() {
            return Ok(());
        }
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r).map_err(|e| Error::json("registry record", e))?;
            buf.push(b'\n');
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        file.write_all(&buf).map_err(|e| Error::io(&self.path, e))?;
        file.sync_data().map_err(|e| Error::io(&self.path, e))
    }

    /// Records every expanded run not yet in the journal. Returns how many
    /// were added.
    pub fn plan(&self, plan: &ExperimentPlan) -> Result<usize> {
        let known = self.snapshot()?;
        let timestamp = now();
        let fresh: Vec<RunRecord> = plan
            .expand()
            .into_iter()
            .filter(|r| !known.contains_key(&r.run_id))
            .map(|r| RunRecord {
                run_id: r.run_id,
                status: RunStatus::Planned,
                artifacts: Artifacts::default(),
                timestamp,
            })
            .collect();
        self.append(&fresh)?;
        Ok(fresh.len())
    }

    fn current(&self, run_id: &str) -> Result<RunRecord> {
        self.snapshot()?.remove(run_id).ok_or_else(|| Error::Validation {
            subject: run_id.to_string(),
            message: "run is not in the registry".into(),
        })
    }

    /// Moves a planned run to scored. Every listed file must exist, and
    /// result files must validate.
    pub fn mark_scored(&self, run_id: &str, artifacts: Artifacts) -> Result<RunRecord> {
        let current = self.current(run_id)?;
        if current.status != RunStatus::Planned {
            return Err(Error::Validation {
                subject: run_id.to_string(),
                message: format!("cannot score a run that is {:?}", current.status).to_lowercase(),
            });
        }
        if artifacts.results.is_empty() {
            return Err(Error::Validation {
                subject: run_id.to_string(),
                message: "no result files given".into(),
            });
        }
        for path in artifacts.predictions.iter().chain(&artifacts.results) {
            if !path.is_file() {
                return Err(Error::MissingArtifact(path.clone()));
            }
        }
        for path in &artifacts.results {
            let violations = validate_interchange(path, InterchangeKind::Result)?;
            if let Some(v) = violations.first() {
                return Err(Error::Validation {
                    subject: path.display().to_string(),
                    message: v.to_string(),
                });
            }
        }
        let record = RunRecord {
            run_id: run_id.to_string(),
            status: RunStatus::Scored,
            artifacts,
            timestamp: now(),
        };
        self.append(std::slice::from_ref(&record))?;
        Ok(record)
    }

    /// Moves a scored run to reported.
    pub fn mark_reported(&self, run_id: &str) -> Result<RunRecord> {
        let current = self.current(run_id)?;
        if current.status != RunStatus::Scored {
            return Err(Error::Validation {
                subject: run_id.to_string(),
                message: format!("cannot report a run that is {:?}", current.status).to_lowercase(),
            });
        }
        let record = RunRecord {
            status: RunStatus::Reported,
            timestamp: now(),
            ..current
        };
        self.append(std::slice::from_ref(&record))?;
        Ok(record)
    }
}
