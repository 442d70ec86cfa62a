//! Size-matched pretraining corpus construction.
//!
//! Raw documents are normalized, segmented into sentences, and sampled into
//! corpora whose word counts never exceed a budget. Words are whitespace
//! delimited tokens after normalization.

mod io;
mod normalize;
mod sample;
mod segment;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::Language;

pub use io::{load_sources, read_spec, write_corpus, SourceEntry, CORPUS_FILE, MANIFEST_FILE, SOURCES_FILE};
pub use normalize::{normalize_bytes, normalize_text};
pub use sample::{
    build_corpus, concat_ordered, content_digest, downsample, mix_bilingual, pools_by_language, sample_corpus,
    Pools,
};
pub use segment::{segment_sentences, word_count};

const SUM_TOLERANCE: f64 = 1e-9;

/// Closed set of source domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Child-directed speech (CHILDES transcripts).
    Cds,
    Dialogue,
    ChildrensBooks,
    WrittenProse,
    MovieSubtitles,
    EducationalSubtitles,
    Wikipedia,
    SimplifiedEncyclopedia,
}

impl Domain {
    pub const ALL: [Domain; 8] = [
        Domain::Cds,
        Domain::Dialogue,
        Domain::ChildrensBooks,
        Domain::WrittenProse,
        Domain::MovieSubtitles,
        Domain::EducationalSubtitles,
        Domain::Wikipedia,
        Domain::SimplifiedEncyclopedia,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Cds => "cds",
            Domain::Dialogue => "dialogue",
            Domain::ChildrensBooks => "childrens_books",
            Domain::WrittenProse => "written_prose",
            Domain::MovieSubtitles => "movie_subtitles",
            Domain::EducationalSubtitles => "educational_subtitles",
            Domain::Wikipedia => "wikipedia",
            Domain::SimplifiedEncyclopedia => "simplified_encyclopedia",
        }
    }

    pub(crate) fn ordinal(self) -> u64 {
        Domain::ALL.iter().position(|d| *d == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Domain::ALL
            .iter()
            .copied()
            .find(|d| d.name() == s.trim())
            .ok_or_else(|| Error::Argument(format!("unknown domain `{s}`")))
    }
}

/// Domain proportions of the 10M-word multi-domain corpora.
pub const MULTI_DOMAIN_PROPORTIONS: [(Domain, f64); 8] = [
    (Domain::Cds, 0.05),
    (Domain::Dialogue, 0.09),
    (Domain::ChildrensBooks, 0.09),
    (Domain::WrittenProse, 0.10),
    (Domain::MovieSubtitles, 0.31),
    (Domain::EducationalSubtitles, 0.11),
    (Domain::Wikipedia, 0.10),
    (Domain::SimplifiedEncyclopedia, 0.15),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub source_id: String,
    pub domain: Domain,
    pub language: Language,
    pub text: String,
}

impl RawDocument {
    /// Normalizes `text`; fails if nothing is left afterwards.
    pub fn new(source_id: impl Into<String>, domain: Domain, language: Language, text: &str) -> Result<Self> {
        let source_id = source_id.into();
        let text = normalize_text(text);
        if text.is_empty() {
            return Err(Error::Data(format!("document `{source_id}` is empty after normalization")));
        }
        Ok(RawDocument {
            source_id,
            domain,
            language,
            text,
        })
    }
}

/// One normalized sentence. `language` and `domain` record where it was
/// sampled from so manifests can be recomputed from any sentence list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub word_count: usize,
    pub language: Language,
    pub domain: Domain,
}

impl SentenceRecord {
    pub fn new(doc_id: impl Into<String>, index: usize, text: impl Into<String>, language: Language, domain: Domain) -> Self {
        let text = text.into();
        SentenceRecord {
            doc_id: doc_id.into(),
            index,
            word_count: word_count(&text),
            text,
            language,
            domain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageShare {
    pub language: Language,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainQuota {
    pub domain: Domain,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrderPolicy {
    /// Seeded uniform interleaving of every source group.
    #[default]
    Shuffled,
    /// Source groups emitted one after another in the listed order. Group
    /// labels are domain names for single-language sampling and language
    /// codes for bilingual mixing; unlisted groups follow in canonical order.
    BlockOrdered(Vec<String>),
}

impl OrderPolicy {
    pub fn label(&self) -> String {
        match self {
            OrderPolicy::Shuffled => "shuffled".to_string(),
            OrderPolicy::BlockOrdered(groups) => format!("block_ordered:{}", groups.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub total_budget_words: u64,
    pub language_mix: Vec<LanguageShare>,
    pub domain_quotas: Vec<DomainQuota>,
    pub seed: u64,
    #[serde(default)]
    pub order_policy: OrderPolicy,
}

impl CorpusSpec {
    /// Single language, single domain: the child-directed speech and
    /// Wikipedia-only settings.
    pub fn single_domain(language: Language, domain: Domain, budget: u64, seed: u64) -> Self {
        CorpusSpec {
            total_budget_words: budget,
            language_mix: vec![LanguageShare { language, fraction: 1.0 }],
            domain_quotas: vec![DomainQuota { domain, proportion: 1.0 }],
            seed,
            order_policy: OrderPolicy::Shuffled,
        }
    }

    /// Multi-domain corpus with the standard domain proportions.
    pub fn multi_domain(language_mix: Vec<LanguageShare>, budget: u64, seed: u64) -> Self {
        CorpusSpec {
            total_budget_words: budget,
            language_mix,
            domain_quotas: MULTI_DOMAIN_PROPORTIONS
                .iter()
                .map(|&(domain, proportion)| DomainQuota { domain, proportion })
                .collect(),
            seed,
            order_policy: OrderPolicy::Shuffled,
        }
    }

    /// Even English/French split.
    pub fn balanced() -> Vec<LanguageShare> {
        vec![
            LanguageShare { language: Language::En, fraction: 0.5 },
            LanguageShare { language: Language::Fr, fraction: 0.5 },
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let lang_sum: f64 = self.language_mix.iter().map(|s| s.fraction).sum();
        if (lang_sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Argument(format!("language fractions sum to {lang_sum}, expected 1.0")));
        }
        let domain_sum: f64 = self.domain_quotas.iter().map(|q| q.proportion).sum();
        if (domain_sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Argument(format!("domain proportions sum to {domain_sum}, expected 1.0")));
        }
        for share in &self.language_mix {
            if !(0.0..=1.0).contains(&share.fraction) {
                return Err(Error::Argument(format!("fraction for {} out of range", share.language)));
            }
        }
        for quota in &self.domain_quotas {
            if !(0.0..=1.0).contains(&quota.proportion) {
                return Err(Error::Argument(format!("proportion for {} out of range", quota.domain)));
            }
        }
        let mut langs: Vec<_> = self.language_mix.iter().map(|s| s.language).collect();
        langs.sort();
        langs.dedup();
        if langs.len() != self.language_mix.len() {
            return Err(Error::Argument("language listed twice in language_mix".into()));
        }
        let mut domains: Vec<_> = self.domain_quotas.iter().map(|q| q.domain).collect();
        domains.sort();
        domains.dedup();
        if domains.len() != self.domain_quotas.len() {
            return Err(Error::Argument("domain listed twice in domain_quotas".into()));
        }
        Ok(())
    }

    pub fn fraction_of(&self, language: Language) -> f64 {
        self.language_mix
            .iter()
            .find(|s| s.language == language)
            .map_or(0.0, |s| s.fraction)
    }

    /// Word budget for `fraction` of the total, floored.
    pub(crate) fn share_of_budget(&self, fraction: f64) -> u64 {
        let words = (self.total_budget_words as f64 * fraction + SUM_TOLERANCE).floor();
        (words.max(0.0) as u64).min(self.total_budget_words)
    }
}

/// Realized counts for one (language, domain) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub language: Language,
    pub domain: Domain,
    pub realized_words: u64,
    pub realized_sentences: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub cells: Vec<CellCount>,
    pub total_words: u64,
    pub total_sentences: u64,
    /// SHA-256 (hex) of the emitted `corpus.txt` bytes.
    pub content_digest: String,
    pub order_label: String,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub spec_echo: CorpusSpec,
}

impl CorpusManifest {
    pub fn describe(sentences: &[SentenceRecord], spec: &CorpusSpec, order_label: String, warnings: Vec<String>) -> Self {
        let mut cells: Vec<CellCount> = Vec::new();
        for s in sentences {
            match cells.iter_mut().find(|c| c.language == s.language && c.domain == s.domain) {
                Some(cell) => {
                    cell.realized_words += s.word_count as u64;
                    cell.realized_sentences += 1;
                }
                None => cells.push(CellCount {
                    language: s.language,
                    domain: s.domain,
                    realized_words: s.word_count as u64,
                    realized_sentences: 1,
                }),
            }
        }
        cells.sort_by_key(|c| (c.language, c.domain));
        CorpusManifest {
            total_words: cells.iter().map(|c| c.realized_words).sum(),
            total_sentences: sentences.len() as u64,
            cells,
            content_digest: content_digest(sentences),
            order_label,
            warnings,
            spec_echo: spec.clone(),
        }
    }

    pub fn words_for_language(&self, language: Language) -> u64 {
        self.cells.iter().filter(|c| c.language == language).map(|c| c.realized_words).sum()
    }

    pub fn words_for_domain(&self, domain: Domain) -> u64 {
        self.cells.iter().filter(|c| c.domain == domain).map(|c| c.realized_words).sum()
    }

    /// Share of total words in `domain`, in `[0, 1]`.
    pub fn domain_share(&self, domain: Domain) -> f64 {
        if self.total_words == 0 {
            return 0.0;
        }
        self.words_for_domain(domain) as f64 / self.total_words as f64
    }
}

/// A built corpus: sentences in emission order plus their manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub sentences: Vec<SentenceRecord>,
    pub manifest: CorpusManifest,
}

impl Corpus {
    /// The bytes written to `corpus.txt`: one sentence per line, LF endings.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.sentences.iter().map(|s| s.text.len() + 1).sum());
        for s in &self.sentences {
            out.push_str(&s.text);
            out.push('\n');
        }
        out
    }

    pub fn total_words(&self) -> u64 {
        self.manifest.total_words
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_proportions_sum_to_one() {
        let total: f64 = MULTI_DOMAIN_PROPORTIONS.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let spec = CorpusSpec::multi_domain(CorpusSpec::balanced(), 10_000_000, 0);
        spec.validate().unwrap();
        assert_eq!(spec.share_of_budget(0.31), 3_100_000);
    }

    #[test]
    fn validate_rejects_bad_sums() {
        let mut spec = CorpusSpec::single_domain(Language::En, Domain::Cds, 10, 0);
        spec.domain_quotas[0].proportion = 0.9;
        assert!(matches!(spec.validate(), Err(Error::Argument(_))));
        let mut spec = CorpusSpec::single_domain(Language::En, Domain::Cds, 10, 0);
        spec.language_mix.push(LanguageShare { language: Language::Fr, fraction: 0.5 });
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_json_shape() {
        let mut spec = CorpusSpec::single_domain(Language::Fr, Domain::Wikipedia, 2_500_000, 7);
        spec.order_policy = OrderPolicy::BlockOrdered(vec!["en".into(), "fr".into()]);
        let json = serde_json::to_value(&spec).unwrap();
        assert_eq!(json["order_policy"]["block_ordered"][1], "fr");
        assert_eq!(json["domain_quotas"][0]["domain"], "wikipedia");
        let back: CorpusSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);
        let shuffled: CorpusSpec = serde_json::from_str(
            r#"{"total_budget_words":5,"language_mix":[{"language":"en","fraction":1.0}],
                "domain_quotas":[{"domain":"cds","proportion":1.0}],"seed":1}"#,
        )
        .unwrap();
        assert_eq!(shuffled.order_policy, OrderPolicy::Shuffled);
    }

    #[test]
    fn domain_names_round_trip() {
        for d in Domain::ALL {
            assert_eq!(d.name().parse::<Domain>().unwrap(), d);
        }
        assert!("news".parse::<Domain>().is_err());
    }
}
