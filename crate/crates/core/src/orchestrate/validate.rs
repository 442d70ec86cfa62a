//! Read-only schema checks for the files exchanged with the model side.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{CorpusManifest, CORPUS_FILE};
use crate::error::{Error, Result};
use crate::eval::io::{NliPrediction, QaPrediction};
use crate::eval::{EvalResult, Role, SentenceScore};
use crate::lang::Language;
use crate::transpose::squad_from_str;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterchangeKind {
    /// Per-token log-probabilities, one JSON object per sentence.
    Pll,
    QaPred,
    NliPred,
    CorpusManifest,
    Result,
    QaDataset,
}

impl InterchangeKind {
    pub const ALL: [InterchangeKind; 6] = [
        InterchangeKind::Pll,
        InterchangeKind::QaPred,
        InterchangeKind::NliPred,
        InterchangeKind::CorpusManifest,
        InterchangeKind::Result,
        InterchangeKind::QaDataset,
    ];

    pub fn key(self) -> &'static str {
        match self {
            InterchangeKind::Pll => "pll",
            InterchangeKind::QaPred => "qa_pred",
            InterchangeKind::NliPred => "nli_pred",
            InterchangeKind::CorpusManifest => "corpus_manifest",
            InterchangeKind::Result => "result",
            InterchangeKind::QaDataset => "qa_dataset",
        }
    }
}

impl fmt::Display for InterchangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for InterchangeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InterchangeKind::ALL
            .into_iter()
            .find(|k| k.key() == s.trim())
            .ok_or_else(|| Error::Argument(format!("unknown interchange kind `{s}`")))
    }
}

/// A schema problem. `line` is 1-based for JSONL inputs and absent for
/// whole-document formats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub line: Option<usize>,
    pub message: String,
}

impl Violation {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Violation {
            line: Some(line),
            message: message.into(),
        }
    }

    fn doc(message: impl Into<String>) -> Self {
        Violation {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Checks `path` against the schema for `kind`. Returns every violation
/// found; an empty list means the file conforms. Only an unreadable file is
/// an error. The file is never modified.
pub fn validate_interchange(path: &Path, kind: InterchangeKind) -> Result<Vec<Violation>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = match String::from_utf8(bytes) {
        Ok(t) => t,
        Err(e) => return Ok(vec![Violation::doc(format!("not UTF-8: {e}"))]),
    };
    let mut violations = match kind {
        InterchangeKind::Pll => check_pll(&text),
        InterchangeKind::QaPred => check_predictions::<QaPrediction>(&text, |p| &p.id),
        InterchangeKind::NliPred => check_predictions::<NliPrediction>(&text, |p| &p.id),
        InterchangeKind::CorpusManifest => check_manifest(&text, path.parent()),
        InterchangeKind::Result => check_result(&text),
        InterchangeKind::QaDataset => check_dataset(&text),
    };
    // line-numbered first, in file order; stable for document-level ones
    violations.sort_by_key(|v| (v.line.is_none(), v.line));
    Ok(violations)
}

fn jsonl_records<T: DeserializeOwned>(text: &str, violations: &mut Vec<Violation>) -> Vec<(usize, T)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(line) {
            Ok(v) => out.push((i + 1, v)),
            Err(e) => violations.push(Violation::at(i + 1, e.to_string())),
        }
    }
    if out.is_empty() && violations.is_empty() {
        violations.push(Violation::doc("no records"));
    }
    out
}

fn check_pll(text: &str) -> Vec<Violation> {
    let mut violations = Vec::new();
    let records: Vec<(usize, SentenceScore)> = jsonl_records(text, &mut violations);
    let mut seen = HashSet::new();
    for (line, r) in &records {
        if r.pair_id.is_empty() {
            violations.push(Violation::at(*line, "empty pair_id"));
        }
        if r.tokens.is_empty() {
            violations.push(Violation::at(*line, "no tokens"));
        }
        if r.tokens.len() != r.logprobs.len() {
            violations.push(Violation::at(
                *line,
                format!("{} tokens but {} log-probabilities", r.tokens.len(), r.logprobs.len()),
            ));
        }
        if let Some(lp) = r.logprobs.iter().find(|lp| !lp.is_finite() || **lp > 0.0) {
            violations.push(Violation::at(*line, format!("log-probability {lp} is not a finite value <= 0")));
        }
        if !seen.insert((r.pair_id.clone(), r.role)) {
            violations.push(Violation::at(*line, format!("duplicate {:?} sentence for pair `{}`", r.role, r.pair_id)));
        }
    }
    let ids: BTreeSet<&String> = records.iter().map(|(_, r)| &r.pair_id).collect();
    for id in ids {
        for (role, name) in [(Role::Good, "good"), (Role::Bad, "bad")] {
            if !seen.contains(&(id.clone(), role)) {
                violations.push(Violation::doc(format!("pair `{id}` lacks a {name} sentence")));
            }
        }
    }
    violations
}

fn check_predictions<T: DeserializeOwned>(text: &str, id: impl Fn(&T) -> &String) -> Vec<Violation> {
    let mut violations = Vec::new();
    let records: Vec<(usize, T)> = jsonl_records(text, &mut violations);
    let mut seen = HashSet::new();
    for (line, r) in &records {
        let id = id(r);
        if id.is_empty() {
            violations.push(Violation::at(*line, "empty id"));
        } else if !seen.insert(id.clone()) {
            violations.push(Violation::at(*line, format!("duplicate id `{id}`")));
        }
    }
    violations
}

fn check_manifest(text: &str, dir: Option<&Path>) -> Vec<Violation> {
    let manifest: CorpusManifest = match serde_json::from_str(text) {
        Ok(m) => m,
        Err(e) => return vec![Violation::doc(e.to_string())],
    };
    let mut violations = Vec::new();
    if let Err(e) = manifest.spec_echo.validate() {
        violations.push(Violation::doc(format!("spec_echo: {e}")));
    }
    let words: u64 = manifest.cells.iter().map(|c| c.realized_words).sum();
    let sentences: u64 = manifest.cells.iter().map(|c| c.realized_sentences).sum();
    if words != manifest.total_words {
        violations.push(Violation::doc(format!("cells sum to {words} words, total_words is {}", manifest.total_words)));
    }
    if sentences != manifest.total_sentences {
        violations.push(Violation::doc(format!(
            "cells sum to {sentences} sentences, total_sentences is {}",
            manifest.total_sentences
        )));
    }
    if manifest.total_words > manifest.spec_echo.total_budget_words {
        violations.push(Violation::doc(format!(
            "total_words {} exceeds budget {}",
            manifest.total_words, manifest.spec_echo.total_budget_words
        )));
    }
    let digest_ok = manifest.content_digest.len() == 64 && manifest.content_digest.bytes().all(|b| b.is_ascii_hexdigit());
    if !digest_ok {
        violations.push(Violation::doc("content_digest is not a hex SHA-256"));
    } else if let Some(corpus) = dir.map(|d| d.join(CORPUS_FILE)).filter(|p| p.is_file()) {
        if let Ok(bytes) = fs::read(&corpus) {
            let actual = hex::encode(Sha256::digest(&bytes));
            if actual != manifest.content_digest {
                violations.push(Violation::doc(format!("content_digest does not match {}", corpus.display())));
            }
        }
    }
    violations
}

fn check_result(text: &str) -> Vec<Violation> {
    match serde_json::from_str::<EvalResult>(text) {
        Err(e) => vec![Violation::doc(e.to_string())],
        Ok(r) => match r.validate() {
            Ok(()) => vec![],
            Err(e) => vec![Violation::doc(e.to_string())],
        },
    }
}

fn check_dataset(text: &str) -> Vec<Violation> {
    let examples = match squad_from_str(text, Language::En) {
        Ok(x) => x,
        Err(e) => return vec![Violation::doc(e.to_string())],
    };
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for ex in &examples {
        if !seen.insert(&ex.id) {
            violations.push(Violation::doc(format!("duplicate question id `{}`", ex.id)));
        }
        if let Err(e) = ex.validate() {
            violations.push(Violation::doc(e.to_string()));
        }
    }
    violations
}
