use super::{EvalResult, ExampleScore};
use crate::error::{Error, Result};

/// Averages results that differ only by seed. Per-example scores are
/// concatenated in seed order, each still tagged with its seed. The output
/// does not depend on input order.
pub fn aggregate_seeds(results: &[EvalResult]) -> Result<EvalResult> {
    let first = results.first().ok_or_else(|| Error::Argument("no results to aggregate".into()))?;
    let key = first.key();
    if let Some(other) = results.iter().find(|r| r.key() != key) {
        return Err(Error::Argument(format!(
            "cannot aggregate {:?} with {:?}",
            key,
            other.key()
        )));
    }
    let mut sorted: Vec<&EvalResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.seeds.clone());
    let mut seeds: Vec<u64> = sorted.iter().flat_map(|r| r.seeds.iter().copied()).collect();
    let n_seeds = seeds.len();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.len() != n_seeds {
        return Err(Error::Argument("duplicate seed ids".into()));
    }

    // weight by seed count so nested aggregates average correctly
    let value = sorted.iter().map(|r| r.value * r.seeds.len() as f64).sum::<f64>() / n_seeds as f64;
    let per_example = if sorted.iter().all(|r| r.per_example.is_some()) {
        let mut all: Vec<ExampleScore> = Vec::new();
        for r in &sorted {
            all.extend(r.per_example.iter().flatten().cloned());
        }
        Some(all)
    } else {
        None
    };
    Ok(EvalResult {
        seeds,
        value,
        per_example,
        ..first.clone()
    })
}
