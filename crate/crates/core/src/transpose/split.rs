use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_SPLIT_RATIOS: (f64, f64, f64) = (0.8, 0.1, 0.1);

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
    pub warnings: Vec<String>,
}

/// Seeded partition into train/dev/test. Dev and test get
/// `floor(n × ratio)` items; train takes the remainder.
pub fn split_dataset<T: Clone>(examples: &[T], ratios: (f64, f64, f64), seed: u64) -> Result<DatasetSplit<T>> {
    let (r_train, r_dev, r_test) = ratios;
    if [r_train, r_dev, r_test].iter().any(|r| !(0.0..=1.0).contains(r)) || (r_train + r_dev + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!("split ratios {ratios:?} must be in [0, 1] and sum to 1")));
    }
    let n = examples.len();
    let mut warnings = Vec::new();
    if n < 3 && r_train > 0.0 && r_dev > 0.0 && r_test > 0.0 {
        warnings.push(format!("degenerate split: {n} examples cannot populate three partitions"));
    }
    let take = |r: f64| ((n as f64 * r) + 1e-9).floor() as usize;
    let n_dev = take(r_dev).min(n);
    let n_test = take(r_test).min(n - n_dev);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| examples[i].clone()).collect::<Vec<_>>();
    Ok(DatasetSplit {
        dev: pick(&order[..n_dev]),
        test: pick(&order[n_dev..n_dev + n_test]),
        train: pick(&order[n_dev + n_test..]),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_examples() {
        let s = split_dataset(&(0..10).collect::<Vec<_>>(), DEFAULT_SPLIT_RATIOS, 1).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (8, 1, 1));
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn deterministic() {
        let items: Vec<_> = (0..57).collect();
        assert_eq!(split_dataset(&items, DEFAULT_SPLIT_RATIOS, 9).unwrap(), split_dataset(&items, DEFAULT_SPLIT_RATIOS, 9).unwrap());
        assert_ne!(split_dataset(&items, DEFAULT_SPLIT_RATIOS, 9).unwrap().dev, split_dataset(&items, DEFAULT_SPLIT_RATIOS, 10).unwrap().dev);
    }

    #[test]
    fn all_train() {
        let s = split_dataset(&[1, 2, 3, 4], (1.0, 0.0, 0.0), 0).unwrap();
        assert_eq!(s.train.len(), 4);
        assert!(s.dev.is_empty() && s.test.is_empty());
    }

    #[test]
    fn tiny_input_warns() {
        let s = split_dataset(&[1, 2], DEFAULT_SPLIT_RATIOS, 0).unwrap();
        assert_eq!(s.warnings.len(), 1);
        assert_eq!(s.train.len(), 2);
        assert!(split_dataset(&[1], (0.5, 0.6, 0.1), 0).is_err());
    }

    proptest! {
        #[test]
        fn disjoint_and_exhaustive(n in 0usize..200, seed in any::<u64>()) {
            let items: Vec<usize> = (0..n).collect();
            let s = split_dataset(&items, DEFAULT_SPLIT_RATIOS, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.dev).chain(&s.test).copied().collect();
            all.sort();
            prop_assert_eq!(all, items);
            prop_assert_eq!(s.dev.len(), n / 10);
        }
    }
}
