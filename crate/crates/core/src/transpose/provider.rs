use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::lang::Language;

/// Environment variable holding the bearer token for external services.
pub const PROVIDER_TOKEN_ENV: &str = "FORGE_PROVIDER_TOKEN";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ProviderFailure(pub String);

pub trait Translator: Send + Sync {
    fn translate(&self, texts: &[String], source: Language, target: Language) -> Result<Vec<String>, ProviderFailure>;
}

pub trait Embedder: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderFailure>;
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn translate(&self, texts: &[String], _: Language, _: Language) -> Result<Vec<String>, ProviderFailure> {
        Ok(texts.to_vec())
    }
}

/// L2-normalized term-frequency vectors over hashed word buckets. Words are
/// lowercased alphanumeric runs; buckets come from 64-bit FNV-1a.
#[derive(Debug, Clone, Copy)]
pub struct HashedBowEmbedder {
    pub dim: usize,
}

impl Default for HashedBowEmbedder {
    fn default() -> Self {
        HashedBowEmbedder { dim: 4096 }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3))
}

impl HashedBowEmbedder {
    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let dim = self.dim.max(1);
        let mut v = vec![0.0; dim];
        let lowered = text.to_lowercase();
        for word in lowered.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            v[(fnv1a(word.as_bytes()) % dim as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl Embedder for HashedBowEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderFailure> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Serialize)]
struct TextsRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct OutputsResponse {
    outputs: Vec<String>,
}

#[derive(Deserialize)]
struct VectorsResponse {
    vectors: Vec<Vec<f64>>,
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(120)))
        .build()
        .into()
}

fn post<R: for<'de> Deserialize<'de>>(
    agent: &ureq::Agent,
    url: &str,
    token: Option<&str>,
    texts: &[String],
) -> Result<R, ProviderFailure> {
    let mut request = agent.post(url).header("Content-Type", "application/json");
    if let Some(token) = token {
        request = request.header("Authorization", &format!("Bearer {token}"));
    }
    let mut response = request
        .send_json(TextsRequest { texts })
        .map_err(|e| ProviderFailure(format!("POST {url}: {e}")))?;
    response
        .body_mut()
        .read_json::<R>()
        .map_err(|e| ProviderFailure(format!("POST {url}: malformed response: {e}")))
}

/// Translation over HTTP: `POST {"texts": [...]}` answered by
/// `{"outputs": [...]}`. The language pair travels as `source`/`target`
/// query parameters.
pub struct HttpTranslator {
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpTranslator {
    pub fn new(endpoint: impl Into<String>, token: Option<String>) -> Self {
        HttpTranslator {
            endpoint: endpoint.into(),
            token,
            agent: agent(),
        }
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, texts: &[String], source: Language, target: Language) -> Result<Vec<String>, ProviderFailure> {
        let sep = if self.endpoint.contains('?') { '&' } else { '?' };
        let url = format!("{}{sep}source={source}&target={target}", self.endpoint);
        let response: OutputsResponse = post(&self.agent, &url, self.token.as_deref(), texts)?;
        if response.outputs.len() != texts.len() {
            return Err(ProviderFailure(format!(
                "translation returned {} outputs for {} inputs",
                response.outputs.len(),
                texts.len()
            )));
        }
        Ok(response.outputs)
    }
}

/// Embeddings over HTTP: `POST {"texts": [...]}` answered by `{"vectors": [[...]]}`.
pub struct HttpEmbedder {
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>, token: Option<String>) -> Self {
        HttpEmbedder {
            endpoint: endpoint.into(),
            token,
            agent: agent(),
        }
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderFailure> {
        let response: VectorsResponse = post(&self.agent, &self.endpoint, self.token.as_deref(), texts)?;
        if response.vectors.len() != texts.len() {
            return Err(ProviderFailure(format!(
                "embedding returned {} vectors for {} inputs",
                response.vectors.len(),
                texts.len()
            )));
        }
        Ok(response.vectors)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TranslationProvider {
    ExternalService { endpoint: String },
    IdentityOffline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingProvider {
    ExternalService { endpoint: String },
    HashedBowOffline { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub translation: TranslationProvider,
    pub embedding: EmbeddingProvider,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig::offline()
    }
}

impl ProviderConfig {
    pub fn offline() -> Self {
        ProviderConfig {
            translation: TranslationProvider::IdentityOffline,
            embedding: EmbeddingProvider::HashedBowOffline {
                dim: HashedBowEmbedder::default().dim,
            },
        }
    }

    pub fn translator(&self, token: Option<String>) -> Box<dyn Translator> {
        match &self.translation {
            TranslationProvider::IdentityOffline => Box::new(IdentityTranslator),
            TranslationProvider::ExternalService { endpoint } => Box::new(HttpTranslator::new(endpoint, token)),
        }
    }

    pub fn embedder(&self, token: Option<String>) -> Box<dyn Embedder> {
        match &self.embedding {
            EmbeddingProvider::HashedBowOffline { dim } => Box::new(HashedBowEmbedder { dim: *dim }),
            EmbeddingProvider::ExternalService { endpoint } => Box::new(HttpEmbedder::new(endpoint, token)),
        }
    }
}
