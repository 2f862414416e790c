use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::http::{api_key_from_env, HttpSettings, JsonClient};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVector(format!("non-finite component at {i}")));
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub trait Embedder: Send + Sync {
    /// Stable name of the model behind the vectors; persisted with an index.
    fn identity(&self) -> String;

    /// One vector per input, in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>>;
}

/// Offline embedder: signed hashing of character trigrams into `dim` buckets,
/// L2-normalised. Similar strings get similar vectors, and the output is a
/// pure function of `(text, seed)`.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    dim: usize,
    seed: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl MockEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("mock embedder dim must be at least 1".into()));
        }
        Ok(MockEmbedder { dim, seed })
    }

    fn hash(&self, bytes: &[u8]) -> u64 {
        let mut h = FNV_OFFSET ^ splitmix64(self.seed);
        for b in bytes {
            h ^= u64::from(*b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        splitmix64(h)
    }

    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        let mut v = vec![0.0; self.dim];
        let chars: Vec<char> = std::iter::once(' ')
            .chain(text.chars().flat_map(char::to_lowercase))
            .chain(std::iter::once(' '))
            .collect();
        let mut buf = String::new();
        for w in chars.windows(3) {
            buf.clear();
            buf.extend(w);
            let h = self.hash(buf.as_bytes());
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[(h % self.dim as u64) as usize] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            v[(splitmix64(self.seed) % self.dim as u64) as usize] = 1.0;
        } else {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        EmbeddingVector { values: v }
    }
}

impl Embedder for MockEmbedder {
    fn identity(&self) -> String {
        format!("mock-trigram:dim={}:seed={}", self.dim, self.seed)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Client for an OpenAI-embeddings-compatible endpoint:
/// `{"model", "input": [..]}` in, `{"data": [{"index", "embedding"}]}` out.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    client: JsonClient,
    model: String,
    batch_size: usize,
    max_concurrent: usize,
}

impl RemoteEmbedder {
    pub fn new(settings: HttpSettings, model: impl Into<String>, batch_size: usize, max_concurrent: usize) -> Self {
        RemoteEmbedder {
            client: JsonClient::new(settings),
            model: model.into(),
            batch_size: batch_size.max(1),
            max_concurrent: max_concurrent.max(1),
        }
    }

    fn embed_batch(&self, batch: &[String]) -> Result<Vec<EmbeddingVector>> {
        let reply = self.client.post_json(&json!({ "model": self.model, "input": batch }))?;
        parse_embeddings_response(&reply, batch.len())
    }
}

pub(crate) fn parse_embeddings_response(reply: &Value, expected: usize) -> Result<Vec<EmbeddingVector>> {
    let data = reply
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Protocol("embeddings response has no `data` array".into()))?;
    let mut slots: Vec<Option<EmbeddingVector>> = vec![None; expected];
    for (pos, item) in data.iter().enumerate() {
        let index = item.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
        let values = item
            .get("embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Protocol(format!("item {pos} has no `embedding`")))?
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| Error::Protocol("non-numeric embedding component".into()))
            })
            .collect::<Result<Vec<f64>>>()?;
        let slot = slots
            .get_mut(index)
            .ok_or_else(|| Error::Protocol(format!("embedding index {index} out of range")))?;
        *slot = Some(EmbeddingVector::new(values)?);
    }
    let out = slots
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::Protocol(format!("missing embedding for input {i}"))))
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = out.first() {
        if let Some(bad) = out.iter().find(|v| v.dim() != first.dim()) {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: bad.dim(),
            });
        }
    }
    Ok(out)
}

impl Embedder for RemoteEmbedder {
    fn identity(&self) -> String {
        format!("remote:{}", self.model)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let batches: Vec<&[String]> = texts.chunks(self.batch_size).collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.max_concurrent)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        let results: Vec<Result<Vec<EmbeddingVector>>> =
            pool.install(|| batches.par_iter().map(|b| self.embed_batch(b)).collect());
        let mut out = Vec::with_capacity(texts.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }
}

/// Which embedder to use, as written in configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbedderSpec {
    Mock {
        #[serde(default = "default_mock_dim")]
        dim: usize,
        #[serde(default)]
        seed: u64,
    },
    Remote {
        endpoint: String,
        model: String,
        #[serde(default = "default_batch")]
        batch_size: usize,
        #[serde(default = "default_concurrency")]
        max_concurrent: usize,
        #[serde(default = "default_retries")]
        retry_limit: u32,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
        #[serde(default = "default_backoff")]
        retry_backoff_ms: u64,
    },
}

fn default_mock_dim() -> usize {
    64
}
fn default_batch() -> usize {
    32
}
fn default_concurrency() -> usize {
    4
}
fn default_retries() -> u32 {
    2
}
fn default_timeout() -> f64 {
    60.0
}
fn default_backoff() -> u64 {
    250
}

pub const EMBED_API_KEY_ENV: &str = "LEGALEX_EMBED_API_KEY";

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec::Mock {
            dim: default_mock_dim(),
            seed: 0,
        }
    }
}

impl EmbedderSpec {
    pub fn build(&self) -> Result<Box<dyn Embedder>> {
        Ok(match self {
            EmbedderSpec::Mock { dim, seed } => Box::new(MockEmbedder::new(*dim, *seed)?),
            EmbedderSpec::Remote {
                endpoint,
                model,
                batch_size,
                max_concurrent,
                retry_limit,
                timeout_secs,
                retry_backoff_ms,
            } => {
                if !(timeout_secs.is_finite() && *timeout_secs > 0.0) {
                    return Err(Error::Config("embedder timeout_secs must be positive".into()));
                }
                Box::new(RemoteEmbedder::new(
                    HttpSettings {
                        endpoint: endpoint.clone(),
                        api_key: api_key_from_env(EMBED_API_KEY_ENV),
                        timeout: Duration::from_secs_f64(*timeout_secs),
                        retry_limit: *retry_limit,
                        retry_backoff: Duration::from_millis(*retry_backoff_ms),
                    },
                    model.clone(),
                    *batch_size,
                    *max_concurrent,
                ))
            }
        })
    }
}
