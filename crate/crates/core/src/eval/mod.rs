//! Task metrics computed from model-emitted prediction and score files.

mod aggregate;
mod clams;
pub mod io;
mod nli;
mod qa;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::Language;

pub use aggregate::aggregate_seeds;
pub use clams::{clams_accuracy, pll, pll_pair_decision, ClamsSummary, MinimalPair, PairDecision, Role, SentenceScore};
pub use nli::{evaluate_nli, nli_accuracy, NliLabel};
pub use qa::{evaluate_qa, normalize_answer, qa_f1_em, QaEvaluation, QaScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Squad,
    Qamr,
    Qasrl,
    Xnli,
    Clams,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Squad, Task::Qamr, Task::Qasrl, Task::Xnli, Task::Clams];

    pub fn title(self) -> &'static str {
        match self {
            Task::Squad => "SQuAD",
            Task::Qamr => "QAMR",
            Task::Qasrl => "QASRL",
            Task::Xnli => "XNLI",
            Task::Clams => "CLAMS",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Task::Squad => "squad",
            Task::Qamr => "qamr",
            Task::Qasrl => "qasrl",
            Task::Xnli => "xnli",
            Task::Clams => "clams",
        }
    }

    /// Metric reported in result tables.
    pub fn headline_metric(self) -> Metric {
        match self {
            Task::Squad | Task::Qamr | Task::Qasrl => Metric::F1,
            Task::Xnli | Task::Clams => Metric::Accuracy,
        }
    }

    /// Whether the task fine-tunes before testing.
    pub fn is_finetuned(self) -> bool {
        self != Task::Clams
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.key() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Argument(format!("unknown task `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    Monolingual,
    Bilingual,
    CrossLingual,
}

impl Setup {
    pub const ALL: [Setup; 3] = [Setup::Monolingual, Setup::Bilingual, Setup::CrossLingual];

    pub fn title(self) -> &'static str {
        match self {
            Setup::Monolingual => "Monolingual",
            Setup::Bilingual => "Bilingual",
            Setup::CrossLingual => "Cross-lingual",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Setup::Monolingual => "monolingual",
            Setup::Bilingual => "bilingual",
            Setup::CrossLingual => "cross_lingual",
        }
    }
}

impl FromStr for Setup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setup::ALL
            .into_iter()
            .find(|x| x.key() == s.trim())
            .ok_or_else(|| Error::Argument(format!("unknown setup `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    F1,
    Em,
    Accuracy,
}

/// Score of one example under one seed, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScore {
    pub id: String,
    pub seed: u64,
    pub score: f64,
}

/// One metric observation. `value` is on the 0–100 scale; per-example
/// scores stay on 0–1. Results averaged over seeds list every seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub task: Task,
    pub setup: Setup,
    pub pretrain_corpus: String,
    pub test_language: Language,
    pub seeds: Vec<u64>,
    pub metric: Metric,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_example: Option<Vec<ExampleScore>>,
}

/// Identifies the cell an [`EvalResult`] belongs to, minus the seed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResultKey {
    pub task: Task,
    pub setup: Setup,
    pub pretrain_corpus: String,
    pub test_language: Language,
    pub metric: Metric,
}

impl EvalResult {
    /// Builds a single-seed result from per-example scores in `[0, 1]`.
    pub fn from_scores(
        task: Task,
        setup: Setup,
        pretrain_corpus: impl Into<String>,
        test_language: Language,
        seed: u64,
        metric: Metric,
        scores: Vec<(String, f64)>,
    ) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Data("no example scores".into()));
        }
        let value = 100.0 * scores.iter().map(|(_, s)| s).sum::<f64>() / scores.len() as f64;
        let result = EvalResult {
            task,
            setup,
            pretrain_corpus: pretrain_corpus.into(),
            test_language,
            seeds: vec![seed],
            metric,
            value,
            per_example: Some(
                scores
                    .into_iter()
                    .map(|(id, score)| ExampleScore { id, seed, score })
                    .collect(),
            ),
        };
        result.validate()?;
        Ok(result)
    }

    pub fn key(&self) -> ResultKey {
        ResultKey {
            task: self.task,
            setup: self.setup,
            pretrain_corpus: self.pretrain_corpus.clone(),
            test_language: self.test_language,
            metric: self.metric,
        }
    }

    /// Range checks, plus: the per-seed means of `per_example`, averaged
    /// over seeds and scaled by 100, reproduce `value` within 1e-6.
    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| Error::Validation {
            subject: format!("{} / {} / {}", self.task, self.pretrain_corpus, self.test_language),
            message,
        };
        if !(0.0..=100.0).contains(&self.value) || !self.value.is_finite() {
            return Err(invalid(format!("value {} outside [0, 100]", self.value)));
        }
        if self.seeds.is_empty() {
            return Err(invalid("no seeds".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(invalid("duplicate seeds".into()));
        }
        let Some(per_example) = &self.per_example else {
            return Ok(());
        };
        let mut by_seed: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
        for ex in per_example {
            if !(0.0..=1.0).contains(&ex.score) {
                return Err(invalid(format!("example `{}` score {} outside [0, 1]", ex.id, ex.score)));
            }
            if !self.seeds.contains(&ex.seed) {
                return Err(invalid(format!("example `{}` tagged with unknown seed {}", ex.id, ex.seed)));
            }
            let entry = by_seed.entry(ex.seed).or_default();
            entry.0 += ex.score;
            entry.1 += 1;
        }
        if by_seed.len() != self.seeds.len() {
            return Err(invalid("per_example does not cover every seed".into()));
        }
        let mean = 100.0 * by_seed.values().map(|(sum, n)| sum / *n as f64).sum::<f64>() / by_seed.len() as f64;
        if (mean - self.value).abs() > 1e-6 {
            return Err(invalid(format!("per_example mean {mean} disagrees with value {}", self.value)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_scores_scales_to_percent() {
        let r = EvalResult::from_scores(
            Task::Xnli,
            Setup::Monolingual,
            "En-Wikipedia",
            Language::En,
            1,
            Metric::Accuracy,
            vec![("a".into(), 1.0), ("b".into(), 0.0), ("c".into(), 1.0), ("d".into(), 1.0)],
        )
        .unwrap();
        assert!((r.value - 75.0).abs() < 1e-12);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["setup"], "monolingual");
        assert_eq!(json["per_example"][1]["seed"], 1);
    }

    #[test]
    fn validate_catches_inconsistent_value() {
        let mut r = EvalResult::from_scores(
            Task::Squad,
            Setup::CrossLingual,
            "Fr-CHILDES",
            Language::En,
            2,
            Metric::F1,
            vec![("a".into(), 0.5)],
        )
        .unwrap();
        r.value = 51.0;
        assert!(matches!(r.validate(), Err(Error::Validation { .. })));
        r.value = 150.0;
        r.per_example = None;
        assert!(r.validate().is_err());
    }

    #[test]
    fn task_and_setup_keys() {
        assert_eq!("qasrl".parse::<Task>().unwrap(), Task::Qasrl);
        assert_eq!("cross_lingual".parse::<Setup>().unwrap(), Setup::CrossLingual);
        assert_eq!(Task::Clams.headline_metric(), Metric::Accuracy);
        assert!(!Task::Clams.is_finetuned());
    }
}
