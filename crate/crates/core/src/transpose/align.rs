use serde::{Deserialize, Serialize};

use super::similarity::{jaro_winkler, levenshtein_similarity};
use crate::error::{Error, Result};

pub const DEFAULT_ALIGN_THRESHOLD: f64 = 0.80;

/// Window sizes considered around the answer's word count.
const WINDOW_SLACK_WORDS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignStatus {
    Exact,
    FuzzyAccepted,
    Rejected,
}

/// Outcome of aligning one answer against one context. `window` holds
/// character offsets `[start, end)` and is absent on rejection, where
/// `score` is the best score seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanAlignment {
    pub status: AlignStatus,
    pub score: f64,
    pub window: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub example_id: String,
    #[serde(default)]
    pub answer_index: usize,
    pub status: AlignStatus,
    pub score: f64,
    pub window: Option<(usize, usize)>,
}

impl AlignmentReport {
    pub fn new(example_id: impl Into<String>, alignment: SpanAlignment) -> Self {
        AlignmentReport {
            example_id: example_id.into(),
            answer_index: 0,
            status: alignment.status,
            score: alignment.score,
            window: alignment.window,
        }
    }
}

/// Mean of normalized Levenshtein similarity and Jaro-Winkler.
pub fn span_score(answer: &str, candidate: &str) -> f64 {
    (levenshtein_similarity(answer, candidate) + jaro_winkler(answer, candidate)) / 2.0
}

/// Char offsets of a byte offset in `s`.
fn char_offset(s: &str, byte: usize) -> usize {
    s[..byte].chars().count()
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(char::is_alphanumeric)
}

/// Leftmost occurrence of `answer` in `context` as byte offsets, preferring
/// occurrences that do not start or end inside a word. The flag is true
/// for such a word-aligned occurrence.
fn exact_occurrence(answer: &str, context: &str) -> Option<((usize, usize), bool)> {
    let first = answer.chars().next();
    let last = answer.chars().next_back();
    let mut occurrences = context.match_indices(answer).map(|(b, _)| (b, b + answer.len())).peekable();
    let leftmost = *occurrences.peek()?;
    let clean = occurrences.find(|&(start, end)| {
        let before = context[..start].chars().next_back();
        let after = context[end..].chars().next();
        let clean_start = !(is_word_char(before) && is_word_char(first));
        let clean_end = !(is_word_char(after) && is_word_char(last));
        clean_start && clean_end
    });
    Some(match clean {
        Some(range) => (range, true),
        None => (leftmost, false),
    })
}

/// Whitespace-delimited words of `s` as byte ranges.
fn word_spans(s: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(st)) => {
                spans.push((st, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(st) = start {
        spans.push((st, s.len()));
    }
    spans
}

/// Locates `answer` in `context`.
///
/// A word-aligned exact occurrence wins with score 1, the leftmost if there
/// are several. Otherwise every window of consecutive context words whose
/// length is within two words of the answer's is scored with
/// [`span_score`]; the best window is accepted when its score reaches
/// `threshold`, ties going to the earliest start. An exact occurrence that
/// starts or ends inside a word is used only when no window is accepted.
pub fn realign_span(answer: &str, context: &str, threshold: f64) -> Result<SpanAlignment> {
    if answer.trim().is_empty() {
        return Err(Error::Argument("empty answer".into()));
    }
    if context.trim().is_empty() {
        return Err(Error::Argument("empty context".into()));
    }
    let exact = exact_occurrence(answer, context);
    let exact_alignment = |(start, _): (usize, usize)| {
        let start_char = char_offset(context, start);
        SpanAlignment {
            status: AlignStatus::Exact,
            score: 1.0,
            window: Some((start_char, start_char + answer.chars().count())),
        }
    };
    if let Some((range, true)) = exact {
        return Ok(exact_alignment(range));
    }

    let words = word_spans(context);
    let answer_words = answer.split_whitespace().count();
    let min_len = answer_words.saturating_sub(WINDOW_SLACK_WORDS).max(1);
    let max_len = answer_words + WINDOW_SLACK_WORDS;

    let mut best: Option<(f64, usize, usize)> = None;
    for first in 0..words.len() {
        for len in min_len..=max_len {
            let Some(&(_, end)) = words.get(first + len - 1) else {
                break;
            };
            let start = words[first].0;
            let score = span_score(answer, &context[start..end]);
            if best.is_none_or(|(b, _, _)| score > b) {
                best = Some((score, start, end));
            }
        }
    }

    Ok(match best {
        Some((score, start, end)) if score >= threshold => {
            let start_char = char_offset(context, start);
            SpanAlignment {
                status: AlignStatus::FuzzyAccepted,
                score,
                window: Some((start_char, start_char + context[start..end].chars().count())),
            }
        }
        _ if exact.is_some() => exact_alignment(exact.unwrap().0),
        best => SpanAlignment {
            status: AlignStatus::Rejected,
            score: best.map_or(0.0, |b| b.0),
            window: None,
        },
    })
}

/// Substring of `s` between char offsets `[start, end)`.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    let mut indices = s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len()));
    let b_start = indices.nth(start)?;
    let b_end = if end == start {
        b_start
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&s[b_start..b_end])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transpose::similarity::jaro_winkler;

    #[test]
    fn exact_substring() {
        let a = realign_span("chat noir", "le chat noir dort", DEFAULT_ALIGN_THRESHOLD).unwrap();
        assert_eq!(a.status, AlignStatus::Exact);
        assert_eq!(a.window, Some((3, 12)));
        assert_eq!(a.score, 1.0);
    }

    #[test]
    fn exact_offsets_are_in_chars() {
        let a = realign_span("forêt", "l'été en forêt", DEFAULT_ALIGN_THRESHOLD).unwrap();
        assert_eq!(a.window, Some((9, 14)));
        // elided article before the answer is still a boundary
        let a = realign_span("église", "devant l'église", DEFAULT_ALIGN_THRESHOLD).unwrap();
        assert_eq!(a.status, AlignStatus::Exact);
        assert_eq!(a.window, Some((9, 15)));
    }

    #[test]
    fn fuzzy_window() {
        let context = "le chat noir dort";
        let a = realign_span("chats noir", context, DEFAULT_ALIGN_THRESHOLD).unwrap();
        assert_eq!(a.status, AlignStatus::FuzzyAccepted);
        assert_eq!(a.window, Some((3, 12)));
        let expected = (0.9 + jaro_winkler("chats noir", "chat noir")) / 2.0;
        assert!((a.score - expected).abs() < 1e-12);
        assert!((a.score - 0.94).abs() < 0.005);
    }

    #[test]
    fn whole_word_occurrence_preferred() {
        let a = realign_span("chat", "chaton et chat", DEFAULT_ALIGN_THRESHOLD).unwrap();
        assert_eq!(a.window, Some((10, 14)));
        // an in-word hit yields to a close whole-word window
        let a = realign_span("1990", "in the 1990s", DEFAULT_ALIGN_THRESHOLD).unwrap();
        assert_eq!(a.status, AlignStatus::FuzzyAccepted);
        assert_eq!(a.window, Some((7, 12)));
        // and is kept when no window is close enough
        let a = realign_span("ion", "une situation", DEFAULT_ALIGN_THRESHOLD).unwrap();
        assert_eq!(a.status, AlignStatus::Exact);
        assert_eq!(a.window, Some((10, 13)));
    }

    #[test]
    fn unrelated_answer_rejected() {
        let a = realign_span("éléphant", "le chat dort", DEFAULT_ALIGN_THRESHOLD).unwrap();
        assert_eq!(a.status, AlignStatus::Rejected);
        assert_eq!(a.window, None);
        assert!(a.score < DEFAULT_ALIGN_THRESHOLD);
        // exhaustive check over every window of the context
        for w in ["le", "chat", "dort", "le chat", "chat dort", "le chat dort"] {
            assert!(span_score("éléphant", w) < DEFAULT_ALIGN_THRESHOLD, "{w}");
        }
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(realign_span("", "ctx", 0.8), Err(Error::Argument(_))));
        assert!(matches!(realign_span("a", "  ", 0.8), Err(Error::Argument(_))));
    }

    #[test]
    fn ties_go_to_earliest_window() {
        let a = realign_span("chiem", "chien et chien", 0.5).unwrap();
        assert_eq!(a.window, Some((0, 5)));
    }

    #[test]
    fn char_slicing() {
        assert_eq!(char_slice("l'été", 2, 5), Some("été"));
        assert_eq!(char_slice("abc", 3, 3), Some(""));
        assert_eq!(char_slice("abc", 1, 4), None);
    }
}
