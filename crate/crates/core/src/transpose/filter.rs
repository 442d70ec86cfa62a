use serde::{Deserialize, Serialize};

use super::provider::Embedder;
use crate::error::{Error, Result};

pub const DEFAULT_FILTER_THRESHOLD: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub example_id: String,
    pub similarity: f64,
    pub kept: bool,
}

/// Cosine similarity clamped to `[-1, 1]`; 0 when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

/// Compares a source sentence with its round-trip translation. Pairs scoring
/// below `threshold` are dropped; a score equal to it is kept.
pub fn back_translation_filter(
    example_id: &str,
    original: &str,
    round_trip: &str,
    embedder: &dyn Embedder,
    threshold: f64,
) -> Result<FilterDecision> {
    let vectors = embedder
        .embed(&[original.to_string(), round_trip.to_string()])
        .map_err(|e| Error::Provider {
            example_id: example_id.to_string(),
            message: e.0,
        })?;
    let [a, b] = vectors.as_slice() else {
        return Err(Error::Provider {
            example_id: example_id.to_string(),
            message: format!("expected 2 vectors, got {}", vectors.len()),
        });
    };
    if a.len() != b.len() {
        return Err(Error::Provider {
            example_id: example_id.to_string(),
            message: "embedding dimensions differ".into(),
        });
    }
    let similarity = cosine_similarity(a, b);
    Ok(FilterDecision {
        example_id: example_id.to_string(),
        similarity,
        kept: similarity >= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transpose::provider::{HashedBowEmbedder, ProviderFailure};

    struct Fixed(Vec<Vec<f64>>);

    impl Embedder for Fixed {
        fn embed(&self, _: &[String]) -> std::result::Result<Vec<Vec<f64>>, ProviderFailure> {
            Ok(self.0.clone())
        }
    }

    struct Down;

    impl Embedder for Down {
        fn embed(&self, _: &[String]) -> std::result::Result<Vec<Vec<f64>>, ProviderFailure> {
            Err(ProviderFailure("connection refused".into()))
        }
    }

    #[test]
    fn identical_sentences_kept() {
        let e = HashedBowEmbedder::default();
        let d = back_translation_filter("s1", "the cat sleeps on the mat", "the cat sleeps on the mat", &e, 0.75).unwrap();
        assert_eq!(d.similarity, 1.0);
        assert!(d.kept);
    }

    #[test]
    fn disjoint_vocabulary_rejected() {
        let e = HashedBowEmbedder::default();
        let d = back_translation_filter("s2", "the cat sleeps", "un chien aboie", &e, 0.75).unwrap();
        assert_eq!(d.similarity, 0.0);
        assert!(!d.kept);
    }

    #[test]
    fn threshold_is_inclusive() {
        // cos = 0.75 exactly: (0.75, sqrt(1 - 0.75^2)) against (1, 0)
        let e = Fixed(vec![vec![1.0, 0.0], vec![0.75, (1.0f64 - 0.5625).sqrt()]]);
        let d = back_translation_filter("s3", "a", "b", &e, 0.75).unwrap();
        assert_eq!(d.similarity, 0.75);
        assert!(d.kept);
        let below = back_translation_filter("s3", "a", "b", &e, 0.75 + 1e-12).unwrap();
        assert!(!below.kept);
    }

    #[test]
    fn provider_error_names_example() {
        match back_translation_filter("s4", "a", "b", &Down, 0.75) {
            Err(Error::Provider { example_id, .. }) => assert_eq!(example_id, "s4"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
