use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::lang::Language;
use crate::transpose::QAExample;

const EN_ARTICLES: &[&str] = &["a", "an", "the"];
const FR_ARTICLES: &[&str] = &["le", "la", "les", "un", "une", "des", "du"];
const FR_ELISIONS: &[&str] = &["l'", "l’", "d'", "d’"];

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '«' | '»' | '‘' | '’' | '“' | '”' | '…' | '–' | '—' | '¿' | '¡')
}

/// Lowercases, strips punctuation and articles, and splits on whitespace.
/// French elided articles (`l'`, `d'`) are detached and dropped first.
pub fn normalize_answer(text: &str, language: Language) -> Vec<String> {
    let lowered = text.to_lowercase();
    let detached: String = match language {
        Language::En => lowered,
        Language::Fr => lowered
            .split_whitespace()
            .map(|word| {
                FR_ELISIONS
                    .iter()
                    .find_map(|e| word.strip_prefix(e))
                    .unwrap_or(word)
            })
            .collect::<Vec<_>>()
            .join(" "),
    };
    let stripped: String = detached.chars().filter(|c| !is_punctuation(*c)).collect();
    let articles = match language {
        Language::En => EN_ARTICLES,
        Language::Fr => FR_ARTICLES,
    };
    stripped
        .split_whitespace()
        .filter(|w| !articles.contains(w))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QaScore {
    pub f1: f64,
    pub em: u8,
}

fn token_f1(pred: &[String], gold: &[String]) -> f64 {
    if pred.is_empty() || gold.is_empty() {
        return if pred.is_empty() && gold.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in gold {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in pred {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Bag-of-tokens F1 and exact match, each maximized over the gold answers.
/// Two empty token sequences count as a perfect match.
pub fn qa_f1_em(pred: &str, golds: &[impl AsRef<str>], language: Language) -> Result<QaScore> {
    if golds.is_empty() {
        return Err(Error::Argument("no gold answers".into()));
    }
    let pred = normalize_answer(pred, language);
    let mut best = QaScore { f1: 0.0, em: 0 };
    for gold in golds {
        let gold = normalize_answer(gold.as_ref(), language);
        best.f1 = best.f1.max(token_f1(&pred, &gold));
        if pred == gold {
            best.em = 1;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaEvaluation {
    /// Mean F1 on the 0–100 scale.
    pub f1: f64,
    pub em: f64,
    /// `(id, f1, em)` per gold question, in gold order.
    pub per_example: Vec<(String, f64, f64)>,
}

/// Scores every gold question against `predictions` (id → text). Every
/// gold id needs a prediction.
pub fn evaluate_qa(gold: &[QAExample], predictions: &BTreeMap<String, String>, language: Language) -> Result<QaEvaluation> {
    if gold.is_empty() {
        return Err(Error::Data("empty gold set".into()));
    }
    let mut per_example = Vec::with_capacity(gold.len());
    for ex in gold {
        let pred = predictions
            .get(&ex.id)
            .ok_or_else(|| Error::Data(format!("no prediction for question `{}`", ex.id)))?;
        let golds: Vec<&str> = ex.answers.iter().map(|a| a.text.as_str()).collect();
        let score = qa_f1_em(pred, &golds, language).map_err(|_| Error::Data(format!("question `{}` has no gold answers", ex.id)))?;
        per_example.push((ex.id.clone(), score.f1, f64::from(score.em)));
    }
    let n = per_example.len() as f64;
    Ok(QaEvaluation {
        f1: 100.0 * per_example.iter().map(|e| e.1).sum::<f64>() / n,
        em: 100.0 * per_example.iter().map(|e| e.2).sum::<f64>() / n,
        per_example,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_answer("The Cat!", Language::En), vec!["cat"]);
        assert_eq!(normalize_answer("l'église", Language::Fr), vec!["église"]);
        assert_eq!(normalize_answer("D’Artagnan et les Mousquetaires", Language::Fr), vec!["artagnan", "et", "mousquetaires"]);
        assert!(normalize_answer("", Language::En).is_empty());
        // English rules leave French articles alone
        assert_eq!(normalize_answer("le chat", Language::En), vec!["le", "chat"]);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(qa_f1_em("Paris", &["Paris"], Language::En).unwrap(), QaScore { f1: 1.0, em: 1 });
        let s = qa_f1_em("the cat sat", &["cat sat down"], Language::En).unwrap();
        assert!((s.f1 - 0.8).abs() < 1e-12);
        assert_eq!(s.em, 0);
        assert_eq!(qa_f1_em("dog", &["cat"], Language::En).unwrap(), QaScore { f1: 0.0, em: 0 });
        assert!(matches!(qa_f1_em("x", &[] as &[&str], Language::En), Err(Error::Argument(_))));
        // articles only: both sides normalize to nothing
        assert_eq!(qa_f1_em("the", &["a"], Language::En).unwrap().f1, 1.0);
    }

    #[test]
    fn repeated_tokens_counted_as_bag() {
        // pred: a a b (3), gold: a b b (3), overlap {a, b} = 2
        let s = qa_f1_em("x x y", &["x y y"], Language::En).unwrap();
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn evaluation_needs_every_prediction() {
        let gold = crate::transpose::squad_from_str(
            r#"{"data":[{"title":"t","paragraphs":[{"context":"le chat dort","qas":[
                {"id":"1","question":"qui ?","answers":[{"text":"le chat","answer_start":0}]},
                {"id":"2","question":"quoi ?","answers":[{"text":"dort","answer_start":8}]}]}]}]}"#,
            Language::Fr,
        )
        .unwrap();
        let mut preds = BTreeMap::from([("1".to_string(), "chat".to_string())]);
        assert!(matches!(evaluate_qa(&gold, &preds, Language::Fr), Err(Error::Data(_))));
        preds.insert("2".into(), "il dort".into());
        let eval = evaluate_qa(&gold, &preds, Language::Fr).unwrap();
        // q1: exact after article removal; q2: P = 1/2, R = 1 → 2/3
        assert!((eval.f1 - 100.0 * (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-9);
        assert!((eval.em - 50.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn bounds_and_gold_monotonicity(
            pred in "[abc ]{0,12}",
            golds in proptest::collection::vec("[abc ]{0,12}", 1..4),
            extra in "[abc ]{0,12}",
        ) {
            let s = qa_f1_em(&pred, &golds, Language::En).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.f1));
            if s.em == 1 {
                prop_assert_eq!(s.f1, 1.0);
            }
            let mut more = golds.clone();
            more.push(extra);
            let t = qa_f1_em(&pred, &more, Language::En).unwrap();
            prop_assert!(t.f1 >= s.f1);
            prop_assert!(t.em >= s.em);
        }
    }
}
