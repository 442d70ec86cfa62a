//! SQuAD v1.1 JSON shape: `data` → articles → `paragraphs` → `qas`.
//! `answer_start` is a character offset into the paragraph context.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{QAExample, QaAnswer};
use crate::error::{Error, Result};
use crate::lang::Language;

#[derive(Debug, Serialize, Deserialize)]
struct SquadFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    data: Vec<SquadArticle>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadArticle {
    #[serde(default)]
    title: String,
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadParagraph {
    context: String,
    qas: Vec<SquadQa>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadQa {
    id: String,
    question: String,
    answers: Vec<SquadAnswer>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadAnswer {
    text: String,
    answer_start: usize,
}

pub fn squad_from_str(json: &str, language: Language) -> Result<Vec<QAExample>> {
    let file: SquadFile = serde_json::from_str(json).map_err(|e| Error::json("SQuAD dataset", e))?;
    let mut out = Vec::new();
    for article in file.data {
        let title = (!article.title.is_empty()).then_some(article.title);
        for paragraph in article.paragraphs {
            for qa in paragraph.qas {
                out.push(QAExample {
                    id: qa.id,
                    title: title.clone(),
                    context: paragraph.context.clone(),
                    question: qa.question,
                    answers: qa
                        .answers
                        .into_iter()
                        .map(|a| QaAnswer {
                            text: a.text,
                            char_start: a.answer_start,
                        })
                        .collect(),
                    language,
                });
            }
        }
    }
    Ok(out)
}

/// Serializes examples, grouping consecutive examples that share a title
/// into an article and those sharing a context into a paragraph.
pub fn squad_to_string(examples: &[QAExample]) -> Result<String> {
    let mut data: Vec<SquadArticle> = Vec::new();
    for ex in examples {
        let title = ex.title.clone().unwrap_or_default();
        if data.last().is_none_or(|a| a.title != title) {
            data.push(SquadArticle {
                title,
                paragraphs: Vec::new(),
            });
        }
        let article = data.last_mut().expect("article pushed above");
        if article.paragraphs.last().is_none_or(|p| p.context != ex.context) {
            article.paragraphs.push(SquadParagraph {
                context: ex.context.clone(),
                qas: Vec::new(),
            });
        }
        let paragraph = article.paragraphs.last_mut().expect("paragraph pushed above");
        paragraph.qas.push(SquadQa {
            id: ex.id.clone(),
            question: ex.question.clone(),
            answers: ex
                .answers
                .iter()
                .map(|a| SquadAnswer {
                    text: a.text.clone(),
                    answer_start: a.char_start,
                })
                .collect(),
        });
    }
    let file = SquadFile {
        version: Some("1.1".into()),
        data,
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::json("SQuAD dataset", e))
}

pub fn read_squad(path: &Path, language: Language) -> Result<Vec<QAExample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    squad_from_str(&text, language)
}

pub fn write_squad(path: &Path, examples: &[QAExample]) -> Result<()> {
    let json = squad_to_string(examples)?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
      "version": "1.1",
      "data": [{"title": "Paris", "paragraphs": [
        {"context": "Paris est la capitale de la France.",
         "qas": [{"id": "a1", "question": "Quelle est la capitale ?",
                  "answers": [{"text": "Paris", "answer_start": 0}]},
                 {"id": "a2", "question": "De quel pays ?",
                  "answers": [{"text": "France", "answer_start": 28}]}]}]}]
    }"#;

    #[test]
    fn reads_and_writes() {
        let examples = squad_from_str(SAMPLE, Language::Fr).unwrap();
        assert_eq!(examples.len(), 2);
        assert_eq!(examples[1].answers[0].char_start, 28);
        assert_eq!(examples[0].title.as_deref(), Some("Paris"));
        for ex in &examples {
            ex.validate().unwrap();
        }
        let written = squad_to_string(&examples).unwrap();
        let value: serde_json::Value = serde_json::from_str(&written).unwrap();
        assert_eq!(value["data"].as_array().unwrap().len(), 1);
        assert_eq!(value["data"][0]["paragraphs"][0]["qas"].as_array().unwrap().len(), 2);
        assert_eq!(squad_from_str(&written, Language::Fr).unwrap(), examples);
    }

    #[test]
    fn malformed_is_json_error() {
        assert!(matches!(squad_from_str("{\"data\": 3}", Language::En), Err(Error::Json { .. })));
    }
}
