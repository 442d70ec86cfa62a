use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    Entailment,
    Contradiction,
    Neutral,
}

impl NliLabel {
    pub fn name(self) -> &'static str {
        match self {
            NliLabel::Entailment => "entailment",
            NliLabel::Contradiction => "contradiction",
            NliLabel::Neutral => "neutral",
        }
    }
}

impl fmt::Display for NliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NliLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entailment" => Ok(NliLabel::Entailment),
            "contradiction" => Ok(NliLabel::Contradiction),
            "neutral" => Ok(NliLabel::Neutral),
            other => Err(Error::Argument(format!("unknown NLI label `{other}`"))),
        }
    }
}

/// Fraction of positions where the labels agree.
pub fn nli_accuracy(preds: &[NliLabel], golds: &[NliLabel]) -> Result<f64> {
    if preds.len() != golds.len() {
        return Err(Error::Argument(format!(
            "{} predictions for {} gold labels",
            preds.len(),
            golds.len()
        )));
    }
    if golds.is_empty() {
        return Err(Error::Argument("no labels to score".into()));
    }
    let correct = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(correct as f64 / golds.len() as f64)
}

/// Joins predictions to gold labels by id and returns `(accuracy, per-example
/// correctness)` in gold order.
pub fn evaluate_nli(
    gold: &[(String, NliLabel)],
    predictions: &BTreeMap<String, NliLabel>,
) -> Result<(f64, Vec<(String, f64)>)> {
    let mut preds = Vec::with_capacity(gold.len());
    for (id, _) in gold {
        preds.push(
            *predictions
                .get(id)
                .ok_or_else(|| Error::Data(format!("no prediction for NLI example `{id}`")))?,
        );
    }
    let golds: Vec<NliLabel> = gold.iter().map(|(_, l)| *l).collect();
    let accuracy = nli_accuracy(&preds, &golds)?;
    let per_example = gold
        .iter()
        .zip(&preds)
        .map(|((id, g), p)| (id.clone(), f64::from(u8::from(g == p))))
        .collect();
    Ok((accuracy, per_example))
}

#[cfg(test)]
mod tests {
    use super::*;
    use NliLabel::*;

    #[test]
    fn accuracy_examples() {
        let gold = [Entailment, Neutral, Contradiction, Neutral];
        assert_eq!(nli_accuracy(&gold, &gold).unwrap(), 1.0);
        assert_eq!(nli_accuracy(&[Entailment, Neutral, Neutral, Entailment], &gold).unwrap(), 0.5);
        assert_eq!(nli_accuracy(&[Neutral, Entailment, Entailment, Contradiction], &gold).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(nli_accuracy(&[Neutral], &[Neutral, Neutral]), Err(Error::Argument(_))));
        assert!(matches!("maybe".parse::<NliLabel>(), Err(Error::Argument(_))));
        assert_eq!(serde_json::from_str::<NliLabel>("\"neutral\"").unwrap(), Neutral);
        assert!(serde_json::from_str::<NliLabel>("\"maybe\"").is_err());
    }

    #[test]
    fn joins_by_id() {
        let gold = vec![("x".to_string(), Entailment), ("y".to_string(), Neutral)];
        let preds = BTreeMap::from([("y".to_string(), Neutral), ("x".to_string(), Contradiction)]);
        let (acc, per) = evaluate_nli(&gold, &preds).unwrap();
        assert_eq!(acc, 0.5);
        assert_eq!(per, vec![("x".to_string(), 0.0), ("y".to_string(), 1.0)]);
        assert!(evaluate_nli(&gold, &BTreeMap::new()).is_err());
    }
}
