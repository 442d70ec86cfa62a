use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{Corpus, CorpusManifest, CorpusSpec, Domain, LanguageShare, OrderPolicy, SentenceRecord};
use crate::error::{Error, Result};
use crate::lang::Language;

/// Sentence pools keyed by domain.
pub type Pools = BTreeMap<Domain, Vec<SentenceRecord>>;

// RNG stream ids; every random decision draws from (seed, stream).
const STREAM_MERGE: u64 = 1 << 32;
const STREAM_MIX: u64 = 2 << 32;
const STREAM_DOWNSAMPLE: u64 = 3 << 32;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn domain_stream(language: Language, domain: Domain) -> u64 {
    let lang = Language::ALL.iter().position(|l| *l == language).unwrap_or(0) as u64;
    1 + lang * 64 + domain.ordinal()
}

/// SHA-256 hex digest of the corpus bytes (one sentence per line, LF).
pub fn content_digest(sentences: &[SentenceRecord]) -> String {
    let mut hasher = Sha256::new();
    for s in sentences {
        hasher.update(s.text.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

/// Visits `pool` in the order given by `order` and keeps sentences until the
/// next one would overshoot `quota`. Returns the kept indices.
fn greedy_fill(pool: &[SentenceRecord], order: &[usize], quota: u64) -> Vec<usize> {
    let mut words = 0u64;
    let mut kept = Vec::new();
    for &i in order {
        let wc = pool[i].word_count as u64;
        if words + wc > quota {
            break;
        }
        words += wc;
        kept.push(i);
    }
    kept
}

fn shuffled_indices(len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(rng);
    order
}

/// Uniform random interleaving that keeps the relative order inside every
/// group. With one non-empty group the output equals that group.
fn riffle_merge<T>(groups: Vec<Vec<T>>, rng: &mut ChaCha8Rng) -> Vec<T> {
    let total: usize = groups.iter().map(Vec::len).sum();
    let mut remaining: Vec<usize> = groups.iter().map(Vec::len).collect();
    let mut iters: Vec<_> = groups.into_iter().map(Vec::into_iter).collect();
    let mut out = Vec::with_capacity(total);
    for left in (1..=total).rev() {
        let mut pick = rng.gen_range(0..left);
        let g = remaining
            .iter()
            .position(|&r| {
                if pick < r {
                    true
                } else {
                    pick -= r;
                    false
                }
            })
            .expect("pick is below the remaining total");
        remaining[g] -= 1;
        out.push(iters[g].next().expect("group has remaining items"));
    }
    out
}

/// Arranges labelled groups according to `policy`; groups arrive in
/// canonical order.
fn arrange(
    mut groups: Vec<(String, Vec<SentenceRecord>)>,
    policy: &OrderPolicy,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SentenceRecord>> {
    match policy {
        OrderPolicy::Shuffled => Ok(riffle_merge(groups.into_iter().map(|(_, g)| g).collect(), rng)),
        OrderPolicy::BlockOrdered(order) => {
            let mut out = Vec::new();
            for label in order {
                let pos = groups
                    .iter()
                    .position(|(l, _)| l == label)
                    .ok_or_else(|| Error::Argument(format!("order policy names unknown or repeated group `{label}`")))?;
                out.extend(groups.remove(pos).1);
            }
            for (_, g) in groups {
                out.extend(g);
            }
            Ok(out)
        }
    }
}

/// Integer word quotas per domain, floored, never summing past the budget.
fn domain_quotas(spec: &CorpusSpec) -> Vec<(Domain, u64)> {
    let mut quotas: Vec<(Domain, u64)> = spec
        .domain_quotas
        .iter()
        .filter(|q| q.proportion > 0.0)
        .map(|q| (q.domain, spec.share_of_budget(q.proportion)))
        .collect();
    while quotas.iter().map(|q| q.1).sum::<u64>() > spec.total_budget_words {
        if let Some(largest) = quotas.iter_mut().max_by_key(|q| q.1) {
            largest.1 -= 1;
        }
    }
    quotas
}

/// Samples a single-language corpus. Each domain's pool is visited in a
/// seeded shuffled order and filled greedily up to its quota; the first
/// sentence that would overshoot stops that domain, so totals never exceed
/// the budget. Domains are sampled in parallel; the result only depends on
/// the inputs and `spec.seed`.
pub fn sample_corpus(spec: &CorpusSpec, pools: &Pools) -> Result<Corpus> {
    spec.validate()?;
    let quotas = domain_quotas(spec);
    for (domain, _) in &quotas {
        if pools.get(domain).is_none_or(Vec::is_empty) {
            return Err(Error::MissingDomain(*domain));
        }
    }

    let sampled: Vec<(Domain, Vec<SentenceRecord>, Vec<String>)> = quotas
        .par_iter()
        .map(|&(domain, quota)| {
            let pool = &pools[&domain];
            let mut rng = rng_for(spec.seed, domain_stream(pool[0].language, domain));
            let order = shuffled_indices(pool.len(), &mut rng);
            let kept = greedy_fill(pool, &order, quota);
            let words: u64 = kept.iter().map(|&i| pool[i].word_count as u64).sum();

            let mut warnings = Vec::new();
            let shortest = pool.iter().map(|s| s.word_count as u64).min().unwrap_or(0);
            if shortest > quota {
                warnings.push(format!(
                    "underfill: {domain} quota of {quota} words is below its shortest sentence ({shortest} words)"
                ));
            } else if kept.len() == pool.len() && words < quota {
                warnings.push(format!("underfill: {domain} pool exhausted at {words} of {quota} words"));
            }
            (domain, kept.into_iter().map(|i| pool[i].clone()).collect(), warnings)
        })
        .collect();

    let mut warnings = Vec::new();
    let mut groups = Vec::with_capacity(sampled.len());
    for (domain, sentences, w) in sampled {
        warnings.extend(w);
        groups.push((domain.name().to_string(), sentences));
    }
    let mut rng = rng_for(spec.seed, STREAM_MERGE);
    let sentences = arrange(groups, &spec.order_policy, &mut rng)?;
    let manifest = CorpusManifest::describe(&sentences, spec, spec.order_policy.label(), warnings);
    Ok(Corpus { sentences, manifest })
}

/// Seeded sentence-level subsample with the same skip-and-stop fill as
/// [`sample_corpus`]. Kept sentences stay in their original relative order.
pub fn downsample(corpus: &[SentenceRecord], target_words: u64, seed: u64) -> Result<Vec<SentenceRecord>> {
    let total: u64 = corpus.iter().map(|s| s.word_count as u64).sum();
    if target_words > total {
        return Err(Error::Argument(format!(
            "downsample target of {target_words} words exceeds corpus size of {total}"
        )));
    }
    let mut rng = rng_for(seed, STREAM_DOWNSAMPLE);
    let order = shuffled_indices(corpus.len(), &mut rng);
    let mut kept = greedy_fill(corpus, &order, target_words);
    kept.sort_unstable();
    Ok(kept.into_iter().map(|i| corpus[i].clone()).collect())
}

/// Combines an English and a French corpus into one of at most
/// `spec.total_budget_words`. Each side is capped at `fraction × budget`
/// words; if a side falls short, the other is cut back so the realized
/// totals keep the requested ratio, to within one sentence. The two are
/// then interleaved (or blocked) per `spec.order_policy`, with group labels
/// `en` and `fr`.
pub fn mix_bilingual(corpus_en: &[SentenceRecord], corpus_fr: &[SentenceRecord], spec: &CorpusSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut warnings = Vec::new();
    let sides = [(Language::En, corpus_en), (Language::Fr, corpus_fr)];
    let mut available = Vec::with_capacity(2);
    for (language, corpus) in sides {
        let fraction = spec.fraction_of(language);
        if fraction > 0.0 && corpus.is_empty() {
            return Err(Error::Argument(format!(
                "{language} corpus is empty but its language fraction is {fraction}"
            )));
        }
        let quota = spec.share_of_budget(fraction);
        let total: u64 = corpus.iter().map(|s| s.word_count as u64).sum();
        if total < quota {
            let longest = corpus.iter().map(|s| s.word_count as u64).max().unwrap_or(0);
            if quota - total > longest {
                warnings.push(format!("underfill: {language} supplies {total} of {quota} words"));
            }
        }
        available.push((fraction, total, total.min(quota)));
    }
    // words per unit of fraction that every active side can supply
    let scale = available
        .iter()
        .filter(|(f, _, _)| *f > 0.0)
        .map(|(f, _, avail)| *avail as f64 / f)
        .fold(f64::INFINITY, f64::min);

    let mut groups = Vec::with_capacity(2);
    for ((language, corpus), (fraction, total, avail)) in sides.into_iter().zip(available) {
        let target = if fraction > 0.0 {
            ((scale * fraction + 1e-9).floor() as u64).min(avail)
        } else {
            0
        };
        let part = if total > target {
            downsample(corpus, target, spec.seed ^ STREAM_MIX.wrapping_add(language as u64))?
        } else {
            corpus.to_vec()
        };
        groups.push((language.code().to_string(), part));
    }
    let mut rng = rng_for(spec.seed, STREAM_MIX);
    let sentences = arrange(groups, &spec.order_policy, &mut rng)?;
    let manifest = CorpusManifest::describe(&sentences, spec, spec.order_policy.label(), warnings);
    Ok(Corpus { sentences, manifest })
}

/// `first` followed by `second`, with no reshuffling across the boundary.
pub fn concat_ordered(first: &Corpus, second: &Corpus, labels: [&str; 2]) -> Corpus {
    let sentences: Vec<SentenceRecord> = first.sentences.iter().chain(&second.sentences).cloned().collect();
    let spec = combined_spec(&first.manifest.spec_echo, &second.manifest.spec_echo, labels);
    let mut warnings = first.manifest.warnings.clone();
    warnings.extend(second.manifest.warnings.iter().cloned());
    let manifest = CorpusManifest::describe(&sentences, &spec, spec.order_policy.label(), warnings);
    Corpus { sentences, manifest }
}

/// Budget-weighted union of two specs, describing a concatenation.
fn combined_spec(a: &CorpusSpec, b: &CorpusSpec, labels: [&str; 2]) -> CorpusSpec {
    let budget = a.total_budget_words + b.total_budget_words;
    let (wa, wb) = if budget == 0 {
        (0.5, 0.5)
    } else {
        (a.total_budget_words as f64 / budget as f64, b.total_budget_words as f64 / budget as f64)
    };
    let mut language_mix: Vec<LanguageShare> = Vec::new();
    for (spec, w) in [(a, wa), (b, wb)] {
        for share in &spec.language_mix {
            match language_mix.iter_mut().find(|s| s.language == share.language) {
                Some(s) => s.fraction += share.fraction * w,
                None => language_mix.push(LanguageShare {
                    language: share.language,
                    fraction: share.fraction * w,
                }),
            }
        }
    }
    let mut domain_quotas: Vec<super::DomainQuota> = Vec::new();
    for (spec, w) in [(a, wa), (b, wb)] {
        for quota in &spec.domain_quotas {
            match domain_quotas.iter_mut().find(|q| q.domain == quota.domain) {
                Some(q) => q.proportion += quota.proportion * w,
                None => domain_quotas.push(super::DomainQuota {
                    domain: quota.domain,
                    proportion: quota.proportion * w,
                }),
            }
        }
    }
    CorpusSpec {
        total_budget_words: budget,
        language_mix,
        domain_quotas,
        seed: a.seed,
        order_policy: OrderPolicy::BlockOrdered(labels.iter().map(|l| l.to_string()).collect()),
    }
}

/// Groups sentences by language and domain.
pub fn pools_by_language(sentences: impl IntoIterator<Item = SentenceRecord>) -> BTreeMap<Language, Pools> {
    let mut out: BTreeMap<Language, Pools> = BTreeMap::new();
    for s in sentences {
        out.entry(s.language).or_default().entry(s.domain).or_default().push(s);
    }
    out
}

/// Builds the corpus described by `spec`: a single [`sample_corpus`] call
/// for one language, or per-language samples at `fraction × budget` mixed
/// by [`mix_bilingual`].
pub fn build_corpus(spec: &CorpusSpec, pools: &BTreeMap<Language, Pools>) -> Result<Corpus> {
    spec.validate()?;
    let active: Vec<&LanguageShare> = spec.language_mix.iter().filter(|s| s.fraction > 0.0).collect();
    let empty = Pools::new();
    if let [only] = active.as_slice() {
        return sample_corpus(spec, pools.get(&only.language).unwrap_or(&empty));
    }
    let mut parts: BTreeMap<Language, Vec<SentenceRecord>> = BTreeMap::new();
    for share in &active {
        let sub = CorpusSpec {
            total_budget_words: spec.share_of_budget(share.fraction),
            language_mix: vec![LanguageShare {
                language: share.language,
                fraction: 1.0,
            }],
            domain_quotas: spec.domain_quotas.clone(),
            seed: spec.seed,
            order_policy: OrderPolicy::Shuffled,
        };
        let corpus = sample_corpus(&sub, pools.get(&share.language).unwrap_or(&empty))?;
        parts.insert(share.language, corpus.sentences);
    }
    let en = parts.remove(&Language::En).unwrap_or_default();
    let fr = parts.remove(&Language::Fr).unwrap_or_default();
    mix_bilingual(&en, &fr, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_pool(language: Language, domain: Domain, n: usize, words: usize) -> Vec<SentenceRecord> {
        (0..n)
            .map(|i| {
                let text = (0..words).map(|w| format!("w{i}x{w}")).collect::<Vec<_>>().join(" ");
                SentenceRecord::new(format!("{domain}-{i}"), 0, text, language, domain)
            })
            .collect()
    }

    fn single(domain: Domain, pool: Vec<SentenceRecord>) -> Pools {
        Pools::from([(domain, pool)])
    }

    #[test]
    fn greedy_fill_of_seven_word_sentences() {
        // 14 * 7 = 98 <= 100 < 105 = 15 * 7
        let pools = single(Domain::Cds, uniform_pool(Language::En, Domain::Cds, 50, 7));
        let spec = CorpusSpec::single_domain(Language::En, Domain::Cds, 100, 3);
        let corpus = sample_corpus(&spec, &pools).unwrap();
        assert_eq!(corpus.sentences.len(), 14);
        assert_eq!(corpus.manifest.total_words, 98);
        assert!(corpus.manifest.warnings.is_empty());
    }

    #[test]
    fn skip_and_stop_never_backfills() {
        // a 1-word sentence would fit after the overshoot, but filling stops
        let mut pool = uniform_pool(Language::En, Domain::Cds, 1, 9);
        pool.extend(uniform_pool(Language::En, Domain::Cds, 1, 1));
        let order = [0, 1];
        assert_eq!(greedy_fill(&pool, &order, 5), Vec::<usize>::new());
        assert_eq!(greedy_fill(&pool, &[1, 0], 5), vec![1]);
    }

    #[test]
    fn zero_budget_gives_empty_corpus() {
        let pools = single(Domain::Wikipedia, uniform_pool(Language::Fr, Domain::Wikipedia, 5, 3));
        let spec = CorpusSpec::single_domain(Language::Fr, Domain::Wikipedia, 0, 1);
        let corpus = sample_corpus(&spec, &pools).unwrap();
        assert!(corpus.sentences.is_empty());
        assert_eq!(corpus.manifest.total_words, 0);
        assert_eq!(corpus.manifest.warnings.len(), 1);
    }

    #[test]
    fn budget_below_shortest_sentence_warns() {
        let pools = single(Domain::Cds, uniform_pool(Language::En, Domain::Cds, 5, 8));
        let spec = CorpusSpec::single_domain(Language::En, Domain::Cds, 5, 1);
        let corpus = sample_corpus(&spec, &pools).unwrap();
        assert_eq!(corpus.manifest.total_words, 0);
        assert!(corpus.manifest.warnings[0].starts_with("underfill"));
    }

    #[test]
    fn missing_domain_is_error() {
        let pools = single(Domain::Cds, uniform_pool(Language::En, Domain::Cds, 5, 3));
        let spec = CorpusSpec::multi_domain(vec![LanguageShare { language: Language::En, fraction: 1.0 }], 100, 1);
        assert!(matches!(sample_corpus(&spec, &pools), Err(Error::MissingDomain(Domain::Dialogue))));
        let mut empty = pools.clone();
        empty.insert(Domain::Wikipedia, vec![]);
        let spec = CorpusSpec::single_domain(Language::En, Domain::Wikipedia, 10, 1);
        assert!(matches!(sample_corpus(&spec, &empty), Err(Error::MissingDomain(Domain::Wikipedia))));
    }

    #[test]
    fn riffle_keeps_group_order() {
        let mut rng = rng_for(9, 0);
        let merged = riffle_merge(vec![vec![1, 2, 3, 4], vec![10, 20], vec![]], &mut rng);
        assert_eq!(merged.len(), 6);
        let a: Vec<_> = merged.iter().filter(|x| **x < 10).copied().collect();
        let b: Vec<_> = merged.iter().filter(|x| **x >= 10).copied().collect();
        assert_eq!(a, vec![1, 2, 3, 4]);
        assert_eq!(b, vec![10, 20]);
        assert_eq!(riffle_merge(vec![vec![], vec![5, 6, 7]], &mut rng), vec![5, 6, 7]);
    }

    #[test]
    fn block_order_by_domain() {
        let pools = Pools::from([
            (Domain::Cds, uniform_pool(Language::En, Domain::Cds, 20, 2)),
            (Domain::Wikipedia, uniform_pool(Language::En, Domain::Wikipedia, 20, 2)),
        ]);
        let mut spec = CorpusSpec::single_domain(Language::En, Domain::Cds, 20, 5);
        spec.domain_quotas = vec![
            super::super::DomainQuota { domain: Domain::Cds, proportion: 0.5 },
            super::super::DomainQuota { domain: Domain::Wikipedia, proportion: 0.5 },
        ];
        spec.order_policy = OrderPolicy::BlockOrdered(vec!["wikipedia".into()]);
        let corpus = sample_corpus(&spec, &pools).unwrap();
        let domains: Vec<_> = corpus.sentences.iter().map(|s| s.domain).collect();
        assert_eq!(domains[..5], [Domain::Wikipedia; 5]);
        assert_eq!(domains[5..], [Domain::Cds; 5]);
        assert_eq!(corpus.manifest.order_label, "block_ordered:wikipedia");

        spec.order_policy = OrderPolicy::BlockOrdered(vec!["news".into()]);
        assert!(sample_corpus(&spec, &pools).is_err());
    }

    #[test]
    fn downsample_semantics() {
        let corpus = uniform_pool(Language::En, Domain::Cds, 250, 10);
        let half = downsample(&corpus, 1_250, 4).unwrap();
        assert_eq!(half.iter().map(|s| s.word_count).sum::<usize>(), 1_250);
        let positions: Vec<usize> = half
            .iter()
            .map(|s| corpus.iter().position(|c| c == s).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));

        assert_eq!(downsample(&corpus, 2_500, 4).unwrap(), corpus);
        assert!(downsample(&corpus, 0, 4).unwrap().is_empty());
        assert!(matches!(downsample(&corpus, 2_501, 4), Err(Error::Argument(_))));
        assert_eq!(downsample(&corpus, 700, 4).unwrap(), downsample(&corpus, 700, 4).unwrap());
    }

    #[test]
    fn mix_requires_nonempty_side() {
        let en = uniform_pool(Language::En, Domain::Cds, 10, 3);
        let spec = CorpusSpec {
            language_mix: CorpusSpec::balanced(),
            ..CorpusSpec::single_domain(Language::En, Domain::Cds, 20, 1)
        };
        assert!(matches!(mix_bilingual(&en, &[], &spec), Err(Error::Argument(_))));
    }

    #[test]
    fn mix_cuts_back_the_fuller_side() {
        let en = uniform_pool(Language::En, Domain::Cds, 3, 10);
        let fr = uniform_pool(Language::Fr, Domain::Cds, 20, 7);
        let spec = CorpusSpec {
            language_mix: CorpusSpec::balanced(),
            ..CorpusSpec::single_domain(Language::En, Domain::Cds, 100, 4)
        };
        let mixed = mix_bilingual(&en, &fr, &spec).unwrap();
        assert_eq!(mixed.manifest.words_for_language(Language::En), 30);
        assert_eq!(mixed.manifest.words_for_language(Language::Fr), 28);
        assert_eq!(mixed.manifest.warnings.len(), 1);
    }

    #[test]
    fn mix_degenerate_fraction_is_identity() {
        let pools = single(Domain::Cds, uniform_pool(Language::En, Domain::Cds, 100, 5));
        let spec = CorpusSpec::single_domain(Language::En, Domain::Cds, 200, 11);
        let mono = sample_corpus(&spec, &pools).unwrap();
        let fr = uniform_pool(Language::Fr, Domain::Cds, 10, 4);
        let mut mix_spec = spec.clone();
        mix_spec.language_mix.push(LanguageShare { language: Language::Fr, fraction: 0.0 });
        let mixed = mix_bilingual(&mono.sentences, &fr, &mix_spec).unwrap();
        assert_eq!(mixed.sentences, mono.sentences);
        assert_eq!(mixed.manifest.content_digest, mono.manifest.content_digest);
    }

    #[test]
    fn concat_order_matters() {
        let a_pools = single(Domain::Cds, uniform_pool(Language::En, Domain::Cds, 300, 5));
        let b_pools = single(Domain::Wikipedia, uniform_pool(Language::En, Domain::Wikipedia, 300, 6));
        let a = sample_corpus(&CorpusSpec::single_domain(Language::En, Domain::Cds, 1_250, 2), &a_pools).unwrap();
        let b = sample_corpus(&CorpusSpec::single_domain(Language::En, Domain::Wikipedia, 1_250, 2), &b_pools).unwrap();
        let ab = concat_ordered(&a, &b, ["childes", "wikipedia"]);
        let ba = concat_ordered(&b, &a, ["wikipedia", "childes"]);
        assert_ne!(ab.manifest.content_digest, ba.manifest.content_digest);
        let mut x: Vec<_> = ab.sentences.iter().map(|s| &s.text).collect();
        let mut y: Vec<_> = ba.sentences.iter().map(|s| &s.text).collect();
        x.sort();
        y.sort();
        assert_eq!(x, y);
        assert_eq!(ab.manifest.order_label, "block_ordered:childes,wikipedia");
        assert_eq!(ab.sentences[..a.sentences.len()], a.sentences[..]);
        // two greedy fills of 1,250 lose less than one sentence each
        assert!(ab.total_words() <= 2_500 && ab.total_words() > 2_500 - 5 - 6);
        ab.manifest.spec_echo.validate().unwrap();
        assert_eq!(ab.manifest.spec_echo.total_budget_words, 2_500);

        let empty = Corpus {
            sentences: vec![],
            manifest: CorpusManifest::describe(&[], &b.manifest.spec_echo, "empty".into(), vec![]),
        };
        assert_eq!(concat_ordered(&a, &empty, ["a", "b"]).sentences, a.sentences);
    }
}
