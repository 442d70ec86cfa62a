//! Projection of extractive QA datasets into a second language.
//!
//! Contexts are translated and validated by back-translation similarity;
//! answers are translated and realigned onto the translated context so each
//! emitted answer is a character-exact substring again.

mod align;
mod filter;
mod pipeline;
mod provider;
mod similarity;
mod split;
mod squad;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::Language;

pub use align::{
    char_slice, realign_span, span_score, AlignStatus, AlignmentReport, SpanAlignment, DEFAULT_ALIGN_THRESHOLD,
};
pub use filter::{back_translation_filter, cosine_similarity, FilterDecision, DEFAULT_FILTER_THRESHOLD};
pub use pipeline::{build_translated_dataset, Cursor, TransposeConfig, TransposeCounts, TransposeOutcome};
pub use provider::{
    EmbeddingProvider, Embedder, HashedBowEmbedder, HttpEmbedder, HttpTranslator, IdentityTranslator, ProviderConfig,
    ProviderFailure, TranslationProvider, Translator, PROVIDER_TOKEN_ENV,
};
pub use similarity::{jaro, jaro_winkler, levenshtein, levenshtein_similarity};
pub use split::{split_dataset, DatasetSplit, DEFAULT_SPLIT_RATIOS};
pub use squad::{read_squad, squad_from_str, squad_to_string, write_squad};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaAnswer {
    pub text: String,
    /// Offset in characters (not bytes) into the context.
    pub char_start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAExample {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub context: String,
    pub question: String,
    pub answers: Vec<QaAnswer>,
    pub language: Language,
}

impl QAExample {
    /// Checks that every answer is found verbatim at its offset.
    pub fn validate(&self) -> Result<()> {
        for (k, answer) in self.answers.iter().enumerate() {
            let end = answer.char_start + answer.text.chars().count();
            match char_slice(&self.context, answer.char_start, end) {
                Some(slice) if slice == answer.text => {}
                _ => {
                    return Err(Error::Validation {
                        subject: self.id.clone(),
                        message: format!("answer {k} `{}` not found at offset {}", answer.text, answer.char_start),
                    })
                }
            }
        }
        Ok(())
    }
}
