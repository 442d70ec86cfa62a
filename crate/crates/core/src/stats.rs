//! Paired bootstrap significance testing between two configurations.
//!
//! The test is one-sided (does `a` beat `b`?). Example ids are resampled
//! with replacement inside each seed; the per-seed mean differences are
//! averaged across seeds to give one bootstrap delta per iteration, and
//!
//! ```text
//! p = (1 + #{iterations with delta <= 0}) / (iterations + 1)
//! ```
//!
//! Iteration `i` draws from a ChaCha stream keyed by `(rng_seed, i)`, so the
//! report does not depend on thread scheduling.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvalResult;

pub const DEFAULT_ITERATIONS: usize = 10_000;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub example_id: String,
    pub score_a: f64,
    pub score_b: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub n_examples: usize,
    pub n_seeds: usize,
    pub iterations: usize,
    pub observed_delta: f64,
    pub p_value: f64,
    pub significant: bool,
    pub rng_seed: u64,
}

/// Per-seed score differences `a - b`, ordered by example id.
fn differences_by_seed(samples: &[PairedSample]) -> Result<Vec<Vec<f64>>> {
    let mut by_seed: BTreeMap<u64, BTreeMap<&str, f64>> = BTreeMap::new();
    for s in samples {
        if !s.score_a.is_finite() || !s.score_b.is_finite() {
            return Err(Error::Argument(format!("non-finite score for `{}` (seed {})", s.example_id, s.seed)));
        }
        if by_seed
            .entry(s.seed)
            .or_default()
            .insert(&s.example_id, s.score_a - s.score_b)
            .is_some()
        {
            return Err(Error::Argument(format!(
                "example `{}` appears twice under seed {}",
                s.example_id, s.seed
            )));
        }
    }
    Ok(by_seed.into_values().map(|m| m.into_values().collect()).collect())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn resampled_delta(diffs: &[Vec<f64>], rng_seed: u64, iteration: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(iteration);
    let total: f64 = diffs
        .iter()
        .map(|d| {
            let n = d.len();
            (0..n).map(|_| d[rng.gen_range(0..n)]).sum::<f64>() / n as f64
        })
        .sum();
    total / diffs.len() as f64
}

/// One-sided paired bootstrap of H1: mean(a) > mean(b).
pub fn paired_bootstrap(samples: &[PairedSample], iterations: usize, rng_seed: u64) -> Result<BootstrapReport> {
    if samples.len() < 2 {
        return Err(Error::Argument(format!("need at least 2 paired samples, got {}", samples.len())));
    }
    if iterations == 0 {
        return Err(Error::Argument("iterations must be positive".into()));
    }
    let diffs = differences_by_seed(samples)?;
    let observed_delta = diffs.iter().map(|d| mean(d)).sum::<f64>() / diffs.len() as f64;
    let not_better = (0..iterations as u64)
        .into_par_iter()
        .filter(|&i| resampled_delta(&diffs, rng_seed, i) <= 0.0)
        .count();
    let p_value = (1 + not_better) as f64 / (iterations + 1) as f64;

    let mut ids: Vec<&str> = samples.iter().map(|s| s.example_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut report = BootstrapReport {
        n_examples: ids.len(),
        n_seeds: diffs.len(),
        iterations,
        observed_delta,
        p_value,
        significant: false,
        rng_seed,
    };
    report.significant = mark_significance(&report, DEFAULT_ALPHA);
    Ok(report)
}

/// An improvement is significant when `p < alpha` and the observed delta is
/// positive. A decline never is, whatever its p-value.
pub fn mark_significance(report: &BootstrapReport, alpha: f64) -> bool {
    report.p_value < alpha && report.observed_delta > 0.0
}

/// Pairs the per-example scores of two results. Seeds pair by equal id
/// unless `seed_map` lists `(seed_a, seed_b)` pairs. Every example of
/// either side needs a partner.
pub fn pair_results(a: &EvalResult, b: &EvalResult, seed_map: Option<&[(u64, u64)]>) -> Result<Vec<PairedSample>> {
    let (Some(ex_a), Some(ex_b)) = (&a.per_example, &b.per_example) else {
        return Err(Error::Argument("both results need per_example scores".into()));
    };
    let map: HashMap<u64, u64> = match seed_map {
        Some(pairs) => pairs.iter().copied().collect(),
        None => a.seeds.iter().map(|s| (*s, *s)).collect(),
    };
    let mut lookup: HashMap<(u64, &str), f64> = HashMap::new();
    for e in ex_b {
        if lookup.insert((e.seed, e.id.as_str()), e.score).is_some() {
            return Err(Error::Argument(format!("example `{}` appears twice under seed {}", e.id, e.seed)));
        }
    }
    let mut samples = Vec::with_capacity(ex_a.len());
    for e in ex_a {
        let seed_b = *map
            .get(&e.seed)
            .ok_or_else(|| Error::Argument(format!("seed {} of the first result has no partner seed", e.seed)))?;
        let score_b = lookup
            .remove(&(seed_b, e.id.as_str()))
            .ok_or_else(|| Error::Argument(format!("example `{}` (seed {}) is unpaired", e.id, e.seed)))?;
        samples.push(PairedSample {
            example_id: e.id.clone(),
            score_a: e.score,
            score_b,
            seed: e.seed,
        });
    }
    if let Some(((seed, id), _)) = lookup.into_iter().next() {
        return Err(Error::Argument(format!("example `{id}` (seed {seed}) of the second result is unpaired")));
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn samples(a: &[f64], b: &[f64], seeds: u64) -> Vec<PairedSample> {
        (0..seeds)
            .flat_map(|seed| {
                a.iter().zip(b).enumerate().map(move |(i, (x, y))| PairedSample {
                    example_id: format!("e{i}"),
                    score_a: *x,
                    score_b: *y,
                    seed,
                })
            })
            .collect()
    }

    #[test]
    fn identical_inputs_not_significant() {
        let v = [0.2, 0.9, 0.4, 1.0, 0.0];
        let r = paired_bootstrap(&samples(&v, &v, 3), 2_000, 1).unwrap();
        assert_eq!(r.observed_delta, 0.0);
        assert!(r.p_value >= 0.99);
        assert!(!r.significant);
    }

    #[test]
    fn separated_inputs_hit_minimum_p() {
        let b = [1.0, 2.0, 3.0, 4.0];
        let a: Vec<f64> = b.iter().map(|x| x + 10.0).collect();
        let r = paired_bootstrap(&samples(&a, &b, 3), 1_000, 5).unwrap();
        assert_eq!(r.p_value, 1.0 / 1_001.0);
        assert!(r.significant);
        assert_eq!((r.n_examples, r.n_seeds), (4, 3));
    }

    #[test]
    fn significance_marking() {
        let mut r = BootstrapReport {
            n_examples: 10,
            n_seeds: 3,
            iterations: 100,
            observed_delta: 4.1,
            p_value: 0.03,
            significant: false,
            rng_seed: 0,
        };
        assert!(mark_significance(&r, 0.05));
        r.observed_delta = -4.1;
        assert!(!mark_significance(&r, 0.05));
        r.observed_delta = 4.1;
        r.p_value = 0.05;
        assert!(!mark_significance(&r, 0.05));
    }

    #[test]
    fn input_errors() {
        assert!(paired_bootstrap(&samples(&[1.0], &[0.0], 1), 10, 0).is_err());
        assert!(paired_bootstrap(&[], 10, 0).is_err());
        let mut dup = samples(&[1.0, 0.0], &[0.0, 0.0], 1);
        dup[1].example_id = "e0".into();
        assert!(matches!(paired_bootstrap(&dup, 10, 0), Err(Error::Argument(_))));
        assert!(paired_bootstrap(&samples(&[1.0, f64::NAN], &[0.0, 0.0], 1), 10, 0).is_err());
    }

    #[test]
    fn pairing_results() {
        use crate::eval::{Metric, Setup, Task};
        use crate::lang::Language;
        let make = |corpus: &str, seed: u64, scores: &[(&str, f64)]| {
            EvalResult::from_scores(
                Task::Xnli,
                Setup::Bilingual,
                corpus,
                Language::En,
                seed,
                Metric::Accuracy,
                scores.iter().map(|(i, s)| (i.to_string(), *s)).collect(),
            )
            .unwrap()
        };
        let a = make("En-Fr-Wikipedia", 1, &[("x", 1.0), ("y", 0.0)]);
        let b = make("En-Wikipedia", 1, &[("y", 1.0), ("x", 1.0)]);
        let pairs = pair_results(&a, &b, None).unwrap();
        assert_eq!(pairs[1], PairedSample { example_id: "y".into(), score_a: 0.0, score_b: 1.0, seed: 1 });

        let b4 = make("En-Wikipedia", 4, &[("y", 1.0), ("x", 1.0)]);
        assert!(pair_results(&a, &b4, None).is_err());
        assert_eq!(pair_results(&a, &b4, Some(&[(1, 4)])).unwrap().len(), 2);
        let short = make("En-Wikipedia", 1, &[("x", 1.0)]);
        assert!(pair_results(&a, &short, None).is_err());
        assert!(pair_results(&short, &a, None).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn deterministic_and_order_free(
            scores in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..20),
            seed in any::<u64>(),
            rot in 0usize..20,
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = scores.into_iter().unzip();
            let s = samples(&a, &b, 2);
            let r1 = paired_bootstrap(&s, 300, seed).unwrap();
            let mut shuffled = s.clone();
            shuffled.rotate_left(rot % s.len());
            shuffled.reverse();
            prop_assert_eq!(&r1, &paired_bootstrap(&shuffled, 300, seed).unwrap());
            prop_assert!(r1.p_value > 0.0 && r1.p_value <= 1.0);
        }

        #[test]
        fn raising_a_never_raises_p(
            scores in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..20),
            shift in 0.0f64..0.5,
            seed in any::<u64>(),
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = scores.into_iter().unzip();
            let shifted: Vec<f64> = a.iter().map(|x| x + shift).collect();
            let base = paired_bootstrap(&samples(&a, &b, 1), 300, seed).unwrap();
            let up = paired_bootstrap(&samples(&shifted, &b, 1), 300, seed).unwrap();
            prop_assert!(up.p_value <= base.p_value);
        }
    }
}
