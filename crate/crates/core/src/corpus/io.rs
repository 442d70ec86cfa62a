use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusSpec, Domain, RawDocument};
use crate::error::{Error, Result};
use crate::lang::Language;

pub const SOURCES_FILE: &str = "sources.json";
pub const CORPUS_FILE: &str = "corpus.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Per-file entry of `sources.json`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub domain: Domain,
    pub language: Language,
}

/// Reads every `.txt` file listed in `<dir>/sources.json`. Each blank-line
/// separated paragraph becomes one document with id `<file>#<n>`.
pub fn load_sources(dir: &Path) -> Result<Vec<RawDocument>> {
    let sidecar = dir.join(SOURCES_FILE);
    let raw = fs::read(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let entries: BTreeMap<String, SourceEntry> =
        serde_json::from_slice(&raw).map_err(|e| Error::json(sidecar.display().to_string(), e))?;

    let mut docs = Vec::new();
    for (file, entry) in &entries {
        let path = dir.join(file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let text = String::from_utf8(bytes)?;
        let mut paragraph = String::new();
        let mut n = 0usize;
        let mut flush = |paragraph: &mut String, docs: &mut Vec<RawDocument>| {
            if let Ok(doc) = RawDocument::new(format!("{file}#{n}"), entry.domain, entry.language, paragraph) {
                docs.push(doc);
                n += 1;
            }
            paragraph.clear();
        };
        for line in text.lines() {
            if line.trim().is_empty() {
                flush(&mut paragraph, &mut docs);
            } else {
                paragraph.push_str(line);
                paragraph.push('\n');
            }
        }
        flush(&mut paragraph, &mut docs);
    }
    Ok(docs)
}

pub fn read_spec(path: &Path) -> Result<CorpusSpec> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    let spec: CorpusSpec = serde_json::from_slice(&raw).map_err(|e| Error::json(path.display().to_string(), e))?;
    spec.validate()?;
    Ok(spec)
}

/// Writes `corpus.txt` and `manifest.json` into `dir`.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let corpus_path = dir.join(CORPUS_FILE);
    fs::write(&corpus_path, corpus.to_text()).map_err(|e| Error::io(&corpus_path, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&corpus.manifest).map_err(|e| Error::json("manifest", e))?;
    fs::write(&manifest_path, json + "\n").map_err(|e| Error::io(&manifest_path, e))
}
