//! Interchange file formats.
//!
//! | file               | one line / document                                                        |
//! |--------------------|----------------------------------------------------------------------------|
//! | PLL scores (JSONL) | `{"pair_id", "role": "good"\|"bad", "phenomenon", "tokens", "logprobs"}`    |
//! | QA predictions     | `{"id", "prediction"}`                                                     |
//! | NLI predictions    | `{"id", "label": "entailment"\|"contradiction"\|"neutral"}`                |
//! | NLI gold           | `{"id", "label", ...}` (extra fields such as premise/hypothesis ignored)   |
//! | minimal pairs      | `{"pair_id", "phenomenon", "good", "bad", "language"}`                     |
//! | results (JSON)     | one [`EvalResult`] document                                                |

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{EvalResult, NliLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPrediction {
    pub id: String,
    pub prediction: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliPrediction {
    pub id: String,
    pub label: NliLabel,
}

/// Parses JSONL text; blank lines are skipped, errors carry 1-based line numbers.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, context: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| serde_json::from_str(line).map_err(|e| Error::json(format!("{context}:{}", i + 1), e)))
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text, &path.display().to_string())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| Error::json(path.display().to_string(), e))?;
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::json(path.display().to_string(), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

/// Reads and validates a result document.
pub fn read_result(path: &Path) -> Result<EvalResult> {
    let result: EvalResult = read_json(path)?;
    result.validate()?;
    Ok(result)
}
