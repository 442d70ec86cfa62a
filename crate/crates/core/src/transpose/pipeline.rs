use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::align::{char_slice, realign_span, AlignStatus, AlignmentReport, SpanAlignment};
use super::filter::{back_translation_filter, FilterDecision};
use super::provider::{Embedder, Translator};
use super::{QAExample, QaAnswer};
use crate::error::{Error, Result};
use crate::lang::Language;

#[derive(Debug, Clone, PartialEq)]
pub struct TransposeConfig {
    pub source: Language,
    pub target: Language,
    pub align_threshold: f64,
    pub filter_threshold: f64,
    /// Attempts per context group before the run stops with a cursor.
    pub max_attempts: usize,
    /// Index of the first context group to process.
    pub start_group: usize,
}

impl Default for TransposeConfig {
    fn default() -> Self {
        TransposeConfig {
            source: Language::En,
            target: Language::Fr,
            align_threshold: super::DEFAULT_ALIGN_THRESHOLD,
            filter_threshold: super::DEFAULT_FILTER_THRESHOLD,
            max_attempts: 3,
            start_group: 0,
        }
    }
}

/// Where an interrupted run stopped. Feed `next_group` back as
/// [`TransposeConfig::start_group`] to resume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cursor {
    pub next_group: usize,
    pub example_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransposeCounts {
    pub input: usize,
    pub processed: usize,
    pub kept: usize,
    pub alignment_rejected: usize,
    pub filter_rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransposeOutcome {
    pub examples: Vec<QAExample>,
    /// One report per (example, answer); `answer_index` orders answers.
    pub alignments: Vec<AlignmentReport>,
    pub filters: Vec<FilterDecision>,
    pub counts: TransposeCounts,
    pub cursor: Option<Cursor>,
}

/// Lowercases char by char, keeping characters whose lowercase form is
/// longer than one char, so char offsets carry over unchanged.
fn casefold(s: &str) -> String {
    s.chars()
        .map(|c| {
            let mut lower = c.to_lowercase();
            match (lower.next(), lower.next()) {
                (Some(l), None) => l,
                _ => c,
            }
        })
        .collect()
}

/// Examples sharing a context, in first-appearance order.
fn group_by_context(src: &[QAExample]) -> Vec<Vec<&QAExample>> {
    let mut groups: Vec<Vec<&QAExample>> = Vec::new();
    let mut index: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for ex in src {
        match index.get(ex.context.as_str()) {
            Some(&g) => groups[g].push(ex),
            None => {
                index.insert(&ex.context, groups.len());
                groups.push(vec![ex]);
            }
        }
    }
    groups
}

struct GroupResult {
    examples: Vec<QAExample>,
    alignments: Vec<AlignmentReport>,
    filters: Vec<FilterDecision>,
    alignment_rejected: usize,
    filter_rejected: usize,
}

fn provider_error(example_id: &str, e: super::provider::ProviderFailure) -> Error {
    Error::Provider {
        example_id: example_id.to_string(),
        message: e.0,
    }
}

fn process_group(
    group: &[&QAExample],
    translator: &dyn Translator,
    embedder: &dyn Embedder,
    cfg: &TransposeConfig,
) -> Result<GroupResult> {
    let lead = group[0];
    let context = lead.context.clone();
    let translated = translator
        .translate(std::slice::from_ref(&context), cfg.source, cfg.target)
        .map_err(|e| provider_error(&lead.id, e))?;
    let translated_context = translated.into_iter().next().unwrap_or_default();
    let round_trip = translator
        .translate(std::slice::from_ref(&translated_context), cfg.target, cfg.source)
        .map_err(|e| provider_error(&lead.id, e))?
        .into_iter()
        .next()
        .unwrap_or_default();
    let decision = back_translation_filter(&lead.id, &context, &round_trip, embedder, cfg.filter_threshold)?;

    let filters: Vec<FilterDecision> = group
        .iter()
        .map(|ex| FilterDecision {
            example_id: ex.id.clone(),
            ..decision.clone()
        })
        .collect();
    if !decision.kept {
        return Ok(GroupResult {
            examples: Vec::new(),
            alignments: Vec::new(),
            filters,
            alignment_rejected: 0,
            filter_rejected: group.len(),
        });
    }

    let mut texts = Vec::new();
    for ex in group {
        texts.push(ex.question.clone());
        texts.extend(ex.answers.iter().map(|a| a.text.clone()));
    }
    let mut translated = translator
        .translate(&texts, cfg.source, cfg.target)
        .map_err(|e| provider_error(&lead.id, e))?
        .into_iter();

    let folded_context = casefold(&translated_context);
    let mut result = GroupResult {
        examples: Vec::new(),
        alignments: Vec::new(),
        filters,
        alignment_rejected: 0,
        filter_rejected: 0,
    };
    for ex in group {
        let question = translated.next().unwrap_or_default();
        let mut answers = Vec::with_capacity(ex.answers.len());
        let mut rejected = false;
        for (k, _) in ex.answers.iter().enumerate() {
            let answer = translated.next().unwrap_or_default();
            let alignment = if answer.trim().is_empty() || folded_context.trim().is_empty() {
                SpanAlignment {
                    status: AlignStatus::Rejected,
                    score: 0.0,
                    window: None,
                }
            } else {
                realign_span(&casefold(&answer), &folded_context, cfg.align_threshold)?
            };
            let mut report = AlignmentReport::new(&ex.id, alignment);
            report.answer_index = k;
            result.alignments.push(report);
            match alignment.window {
                Some((start, end)) => answers.push(QaAnswer {
                    text: char_slice(&translated_context, start, end).unwrap_or_default().to_string(),
                    char_start: start,
                }),
                None => rejected = true,
            }
        }
        if rejected {
            result.alignment_rejected += 1;
            continue;
        }
        result.examples.push(QAExample {
            id: ex.id.clone(),
            title: ex.title.clone(),
            context: translated_context.clone(),
            question,
            answers,
            language: cfg.target,
        });
    }
    Ok(result)
}

/// Translates `src` context by context. A context whose back-translation
/// scores below the filter threshold drops all of its questions; an
/// example with any answer that cannot be realigned is dropped as well.
///
/// Provider failures are retried `max_attempts` times; if a context group
/// still fails the run stops there and the outcome carries a [`Cursor`].
/// Everything before the cursor is complete.
pub fn build_translated_dataset(
    src: &[QAExample],
    translator: &dyn Translator,
    embedder: &dyn Embedder,
    cfg: &TransposeConfig,
) -> Result<TransposeOutcome> {
    for ex in src {
        ex.validate()?;
    }
    let groups = group_by_context(src);
    let mut outcome = TransposeOutcome {
        examples: Vec::new(),
        alignments: Vec::new(),
        filters: Vec::new(),
        counts: TransposeCounts {
            input: src.len(),
            ..TransposeCounts::default()
        },
        cursor: None,
    };

    for (g, group) in groups.iter().enumerate().skip(cfg.start_group) {
        let mut attempt = 0;
        let result = loop {
            attempt += 1;
            match process_group(group, translator, embedder, cfg) {
                Err(Error::Provider { example_id, message }) if attempt < cfg.max_attempts.max(1) => {
                    warn!("provider failure on {example_id} (attempt {attempt}): {message}");
                }
                other => break other,
            }
        };
        let result = match result {
            Ok(r) => r,
            Err(Error::Provider { example_id, message }) => {
                warn!("stopping at context group {g} ({example_id}): {message}");
                outcome.cursor = Some(Cursor {
                    next_group: g,
                    example_id,
                    error: message,
                });
                break;
            }
            Err(e) => return Err(e),
        };
        outcome.counts.processed += group.len();
        outcome.counts.kept += result.examples.len();
        outcome.counts.alignment_rejected += result.alignment_rejected;
        outcome.counts.filter_rejected += result.filter_rejected;
        outcome.examples.extend(result.examples);
        outcome.alignments.extend(result.alignments);
        outcome.filters.extend(result.filters);
    }
    info!(
        "transposed {} of {} examples ({} alignment rejects, {} filter rejects)",
        outcome.counts.kept, outcome.counts.input, outcome.counts.alignment_rejected, outcome.counts.filter_rejected
    );
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transpose::provider::{HashedBowEmbedder, IdentityTranslator, ProviderFailure};
    use std::collections::HashMap;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn example(id: &str, context: &str, answer: &str) -> QAExample {
        let byte = context.find(answer).unwrap();
        QAExample {
            id: id.into(),
            title: None,
            context: context.into(),
            question: format!("question {id}?"),
            answers: vec![QaAnswer {
                text: answer.into(),
                char_start: context[..byte].chars().count(),
            }],
            language: Language::En,
        }
    }

    fn dataset() -> Vec<QAExample> {
        vec![
            example("a", "The black cat sleeps on the red mat.", "black cat"),
            example("b", "The black cat sleeps on the red mat.", "red mat"),
            example("c", "Paris is the capital of France.", "Paris"),
            example("d", "Water boils at one hundred degrees.", "one hundred degrees"),
        ]
    }

    /// Word-by-word dictionary translation; unknown words pass through.
    struct Dictionary(HashMap<&'static str, &'static str>);

    impl Translator for Dictionary {
        fn translate(&self, texts: &[String], s: Language, _: Language) -> std::result::Result<Vec<String>, ProviderFailure> {
            Ok(texts
                .iter()
                .map(|t| {
                    t.split(' ')
                        .map(|w| {
                            let found = if s == Language::En {
                                self.0.get(w).copied()
                            } else {
                                self.0.iter().find(|(_, v)| **v == w).map(|(k, _)| *k)
                            };
                            found.unwrap_or(w).to_string()
                        })
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect())
        }
    }

    /// Back-translations come out as unrelated tokens.
    struct Scrambler;

    impl Translator for Scrambler {
        fn translate(&self, texts: &[String], _: Language, target: Language) -> std::result::Result<Vec<String>, ProviderFailure> {
            Ok(texts
                .iter()
                .map(|t| if target == Language::En { format!("zq{}", t.len()) } else { t.clone() })
                .collect())
        }
    }

    /// Fails every call after the first `ok_calls`.
    struct Flaky {
        ok_calls: usize,
        calls: AtomicUsize,
    }

    impl Translator for Flaky {
        fn translate(&self, texts: &[String], _: Language, _: Language) -> std::result::Result<Vec<String>, ProviderFailure> {
            if self.calls.fetch_add(1, Ordering::SeqCst) >= self.ok_calls {
                return Err(ProviderFailure("503 service unavailable".into()));
            }
            Ok(texts.to_vec())
        }
    }

    #[test]
    fn identity_translation_is_lossless() {
        let src = dataset();
        let out =
            build_translated_dataset(&src, &IdentityTranslator, &HashedBowEmbedder::default(), &TransposeConfig::default())
                .unwrap();
        assert_eq!(out.counts.kept, 4);
        assert!(out.alignments.iter().all(|a| a.status == AlignStatus::Exact));
        assert!(out.filters.iter().all(|f| f.kept && f.similarity == 1.0));
        for (a, b) in out.examples.iter().zip(&src) {
            assert_eq!(a.answers, b.answers);
            assert_eq!(a.language, Language::Fr);
        }
        assert!(out.cursor.is_none());
    }

    #[test]
    fn dictionary_translation_realigns_inflected_answer() {
        let dict = Dictionary(HashMap::from([
            ("The", "Le"),
            ("black", "noir"),
            ("cat", "chat"),
            ("sleeps", "dort"),
            ("on", "sur"),
            ("the", "le"),
            ("red", "rouge"),
            ("mat.", "tapis."),
            ("mat", "tapis"),
        ]));
        // answer order differs from the context order after translation
        let src = vec![example("a", "The black cat sleeps on the red mat.", "red mat")];
        let out = build_translated_dataset(&src, &dict, &HashedBowEmbedder::default(), &TransposeConfig::default()).unwrap();
        assert_eq!(out.examples.len(), 1);
        assert_eq!(out.examples[0].context, "Le noir chat dort sur le rouge tapis.");
        assert_eq!(out.examples[0].answers[0].text, "rouge tapis");
        out.examples[0].validate().unwrap();
    }

    #[test]
    fn scrambled_round_trips_drop_everything() {
        let out =
            build_translated_dataset(&dataset(), &Scrambler, &HashedBowEmbedder::default(), &TransposeConfig::default())
                .unwrap();
        assert_eq!(out.counts.kept, 0);
        assert_eq!(out.counts.filter_rejected, 4);
        assert_eq!(out.filters.len(), 4);
        assert!(out.alignments.is_empty());
    }

    #[test]
    fn outage_returns_resumable_cursor() {
        // each kept group takes 3 translate calls: context, round trip, QA texts
        let flaky = Flaky {
            ok_calls: 3,
            calls: AtomicUsize::new(0),
        };
        let src = dataset();
        let out = build_translated_dataset(&src, &flaky, &HashedBowEmbedder::default(), &TransposeConfig::default()).unwrap();
        let cursor = out.cursor.clone().unwrap();
        assert_eq!(cursor.next_group, 1);
        assert_eq!(cursor.example_id, "c");
        assert_eq!(out.counts.processed, 2);
        assert_eq!(out.counts.kept, 2);

        let resumed = build_translated_dataset(
            &src,
            &IdentityTranslator,
            &HashedBowEmbedder::default(),
            &TransposeConfig {
                start_group: cursor.next_group,
                ..TransposeConfig::default()
            },
        )
        .unwrap();
        assert_eq!(resumed.counts.processed, 2);
        assert_eq!(out.counts.kept + resumed.counts.kept, src.len());
    }

    #[test]
    fn retries_recover_transient_failure() {
        struct Once(AtomicUsize);
        impl Translator for Once {
            fn translate(&self, texts: &[String], _: Language, _: Language) -> std::result::Result<Vec<String>, ProviderFailure> {
                if self.0.fetch_add(1, Ordering::SeqCst) == 0 {
                    return Err(ProviderFailure("timeout".into()));
                }
                Ok(texts.to_vec())
            }
        }
        let out =
            build_translated_dataset(&dataset(), &Once(AtomicUsize::new(0)), &HashedBowEmbedder::default(), &TransposeConfig::default())
                .unwrap();
        assert!(out.cursor.is_none());
        assert_eq!(out.counts.kept, 4);
    }

    #[test]
    fn invalid_source_rejected() {
        let mut src = dataset();
        src[0].answers[0].char_start = 1;
        assert!(build_translated_dataset(&src, &IdentityTranslator, &HashedBowEmbedder::default(), &TransposeConfig::default()).is_err());
    }

    #[test]
    fn casefold_keeps_char_count() {
        assert_eq!(casefold("Été À Paris"), "été à paris");
        assert_eq!(casefold("İstanbul").chars().count(), "İstanbul".chars().count());
    }
}
