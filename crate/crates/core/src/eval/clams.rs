use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::Language;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalPair {
    pub pair_id: String,
    pub phenomenon: String,
    pub good: String,
    pub bad: String,
    pub language: Language,
}

impl MinimalPair {
    pub fn validate(&self) -> Result<()> {
        if self.good.trim().is_empty() || self.bad.trim().is_empty() {
            return Err(Error::Data(format!("pair `{}` has an empty sentence", self.pair_id)));
        }
        if self.good == self.bad {
            return Err(Error::Data(format!("pair `{}` has identical sentences", self.pair_id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Good,
    Bad,
}

/// Per-token natural-log probabilities of one sentence, each taken with
/// that position masked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub pair_id: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phenomenon: Option<String>,
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairDecision {
    Correct,
    Incorrect,
}

impl PairDecision {
    pub fn indicator(self) -> f64 {
        match self {
            PairDecision::Correct => 1.0,
            PairDecision::Incorrect => 0.0,
        }
    }
}

/// Pseudo-log-likelihood: the plain sum of token log-probabilities.
pub fn pll(score: &SentenceScore) -> Result<f64> {
    if score.tokens.len() != score.logprobs.len() {
        return Err(Error::Data(format!(
            "pair `{}` ({:?}): {} tokens but {} logprobs",
            score.pair_id,
            score.role,
            score.tokens.len(),
            score.logprobs.len()
        )));
    }
    if score.logprobs.iter().any(|x| x.is_nan()) {
        return Err(Error::Data(format!("pair `{}` ({:?}): NaN logprob", score.pair_id, score.role)));
    }
    Ok(score.logprobs.iter().sum())
}

/// Correct iff the grammatical sentence has strictly higher PLL. Ties are
/// incorrect.
pub fn pll_pair_decision(good: &SentenceScore, bad: &SentenceScore) -> Result<PairDecision> {
    if good.pair_id != bad.pair_id {
        return Err(Error::Argument(format!(
            "scores belong to different pairs (`{}` vs `{}`)",
            good.pair_id, bad.pair_id
        )));
    }
    if good.role != Role::Good || bad.role != Role::Bad {
        return Err(Error::Argument(format!("pair `{}`: roles are swapped", good.pair_id)));
    }
    Ok(if pll(good)? > pll(bad)? {
        PairDecision::Correct
    } else {
        PairDecision::Incorrect
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClamsSummary {
    /// Example-weighted accuracy in `[0, 1]`.
    pub overall: f64,
    pub per_phenomenon: BTreeMap<String, f64>,
    /// Decision per pair, in input pair order.
    pub decisions: Vec<(String, PairDecision)>,
}

/// Scores every minimal pair. Each pair needs exactly one good and one bad
/// sentence score; scores for unknown pairs are rejected.
pub fn clams_accuracy(pairs: &[MinimalPair], scores: &[SentenceScore]) -> Result<ClamsSummary> {
    if pairs.is_empty() {
        return Err(Error::Data("no minimal pairs to score".into()));
    }
    let mut by_pair: HashMap<&str, (Option<&SentenceScore>, Option<&SentenceScore>)> = HashMap::new();
    for pair in pairs {
        pair.validate()?;
        if by_pair.insert(&pair.pair_id, (None, None)).is_some() {
            return Err(Error::Data(format!("pair `{}` listed twice", pair.pair_id)));
        }
    }
    for score in scores {
        let slots = by_pair
            .get_mut(score.pair_id.as_str())
            .ok_or_else(|| Error::Data(format!("score for unknown pair `{}`", score.pair_id)))?;
        let slot = match score.role {
            Role::Good => &mut slots.0,
            Role::Bad => &mut slots.1,
        };
        if slot.replace(score).is_some() {
            return Err(Error::Data(format!("duplicate {:?} score for pair `{}`", score.role, score.pair_id)));
        }
    }

    let mut decisions = Vec::with_capacity(pairs.len());
    let mut per_phenomenon: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for pair in pairs {
        let (good, bad) = match by_pair[pair.pair_id.as_str()] {
            (Some(g), Some(b)) => (g, b),
            (None, _) => return Err(Error::Data(format!("missing good score for pair `{}`", pair.pair_id))),
            (_, None) => return Err(Error::Data(format!("missing bad score for pair `{}`", pair.pair_id))),
        };
        let decision = pll_pair_decision(good, bad)?;
        let entry = per_phenomenon.entry(pair.phenomenon.clone()).or_default();
        entry.0 += decision.indicator();
        entry.1 += 1;
        decisions.push((pair.pair_id.clone(), decision));
    }
    let overall = decisions.iter().map(|(_, d)| d.indicator()).sum::<f64>() / decisions.len() as f64;
    Ok(ClamsSummary {
        overall,
        per_phenomenon: per_phenomenon.into_iter().map(|(k, (c, n))| (k, c / n as f64)).collect(),
        decisions,
    })
}
