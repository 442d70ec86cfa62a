use super::{RawDocument, SentenceRecord};
use crate::lang::Language;

const TERMINATORS: [char; 4] = ['.', '!', '?', '…'];

/// Closing marks allowed after a terminator, e.g. `dit-il.»` or `(yes!)`.
const CLOSERS: [char; 7] = ['"', '\'', '»', ')', ']', '”', '’'];

const EN_ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "jr.", "sr.", "vs.", "etc.", "e.g.", "i.e.", "mt.", "approx.",
];

const FR_ABBREVIATIONS: &[&str] = &[
    "m.", "mme.", "mlle.", "mm.", "dr.", "pr.", "me.", "st.", "ste.", "etc.", "cf.", "p.", "ex.", "av.", "env.", "n°.",
];

fn abbreviations(language: Language) -> &'static [&'static str] {
    match language {
        Language::En => EN_ABBREVIATIONS,
        Language::Fr => FR_ABBREVIATIONS,
    }
}

/// Number of maximal non-whitespace runs.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

fn ends_sentence(word: &str, language: Language) -> bool {
    let trimmed = word.trim_end_matches(CLOSERS);
    if !trimmed.ends_with(TERMINATORS) {
        return false;
    }
    !abbreviations(language).contains(&trimmed)
}

/// Splits a normalized document into sentences. A boundary falls after a
/// whitespace-delimited token ending in `.`, `!`, `?` or `…` (optionally
/// followed by closing quotes/brackets) unless the token is a known
/// abbreviation for the document's language. Trailing text without a
/// terminator forms the last sentence.
pub fn segment_sentences(doc: &RawDocument) -> Vec<SentenceRecord> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let flush = |current: &mut Vec<&str>, out: &mut Vec<SentenceRecord>| {
        if current.is_empty() {
            return;
        }
        let index = out.len();
        out.push(SentenceRecord::new(&doc.source_id, index, current.join(" "), doc.language, doc.domain));
        current.clear();
    };
    for word in doc.text.split_whitespace() {
        current.push(word);
        if ends_sentence(word, doc.language) {
            flush(&mut current, &mut out);
        }
    }
    flush(&mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Domain;
    use proptest::prelude::*;

    fn doc(text: &str, language: Language) -> RawDocument {
        RawDocument::new("d", Domain::Cds, language, text).unwrap()
    }

    fn counts(text: &str, language: Language) -> Vec<usize> {
        segment_sentences(&doc(text, language)).iter().map(|s| s.word_count).collect()
    }

    #[test]
    fn two_clauses() {
        let sents = segment_sentences(&doc("il dort. elle lit.", Language::Fr));
        assert_eq!(sents.len(), 2);
        assert_eq!(sents[0].text, "il dort.");
        assert_eq!(sents[1].index, 1);
        assert_eq!(counts("il dort. elle lit.", Language::Fr), vec![2, 2]);
    }

    #[test]
    fn abbreviation_suppresses_boundary() {
        assert_eq!(counts("mr. smith left.", Language::En), vec![3]);
        assert_eq!(counts("m. dupont est parti. mme. durand reste.", Language::Fr), vec![4, 3]);
        // the French list does not cover English titles and vice versa
        assert_eq!(counts("mme. x", Language::En).len(), 2);
    }

    #[test]
    fn no_terminator_single_sentence() {
        let sents = segment_sentences(&doc("no terminator here", Language::En));
        assert_eq!(sents.len(), 1);
        assert_eq!(sents[0].word_count, 3);
    }

    #[test]
    fn other_terminators_and_closers() {
        assert_eq!(counts("tu viens ? oui ! bon… «allez.» fini", Language::Fr), vec![3, 2, 1, 1, 1]);
        assert_eq!(counts("really?! (yes.) ok", Language::En), vec![1, 1, 1]);
        // a terminator glued to the next word is not a boundary
        assert_eq!(counts("version 3.5 out now.", Language::En), vec![4]);
    }

    proptest! {
        #[test]
        fn preserves_every_character(text in "[a-z .!?…]{0,60}") {
            let normalized = crate::corpus::normalize_text(&text);
            prop_assume!(!normalized.is_empty());
            let d = doc(&normalized, Language::En);
            let sents = segment_sentences(&d);
            let joined = sents.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
            prop_assert_eq!(joined, normalized);
            for s in &sents {
                prop_assert!(s.word_count > 0);
                prop_assert_eq!(s.word_count, word_count(&s.text));
                prop_assert!(!s.text.contains('\n'));
            }
        }
    }
}
