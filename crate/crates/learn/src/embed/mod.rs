//! Context embeddings for deck text.
//!
//! Two providers produce a `T x D` matrix for a deck: a remote service speaking
//! the `/embed` protocol, and an offline [`fallback_embed`] that hashes
//! `(token, position)` pairs into normalised Gaussian vectors. Results can be
//! cached on disk keyed by provider, layer and text.

mod cache;
mod fallback;
mod remote;

pub use cache::EmbeddingCache;
pub use fallback::{fallback_embed, FALLBACK_TOKENS, PAD_TOKEN};
pub use remote::{remote_embed, EmbedRequest, EmbedResponse};

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Default context width at desk scale.
pub const DEFAULT_CONTEXT_DIM: usize = 256;

/// Environment variable naming the sidecar base URL.
pub const SIDECAR_URL_ENV: &str = "FRACTURE_EMBED_URL";

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("deck text is empty")]
    EmptyText,
    #[error("embedding service unreachable at {url}: {reason}")]
    Transport { url: String, reason: String },
    #[error("embedding service returned status {status}: {message}")]
    Remote { status: u16, message: String },
    #[error("malformed embedding response: {0}")]
    Protocol(String),
    #[error("embedding width {got} does not match the model's context width {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("progression {0} is outside [0.3, 1]")]
    Progression(f64),
    #[error("embedding cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `tokens x dim` row-major embedding of one text.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextEmbedding {
    pub tokens: usize,
    pub dim: usize,
    pub data: Vec<f32>,
    pub provider: String,
    /// Hex SHA-256 of the embedded text.
    pub text_hash: String,
}

impl ContextEmbedding {
    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|v| *v as f64).collect()
    }
}

pub fn text_hash(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Provider {
    Fallback {
        #[serde(default = "default_dim")]
        dim: usize,
    },
    Remote {
        url: String,
        #[serde(default)]
        layer: i64,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
}

fn default_dim() -> usize {
    DEFAULT_CONTEXT_DIM
}

fn default_timeout() -> f64 {
    30.0
}

impl Default for Provider {
    fn default() -> Self {
        Provider::Fallback { dim: DEFAULT_CONTEXT_DIM }
    }
}

impl Provider {
    /// Stable identifier used in cache keys and embedding metadata.
    pub fn id(&self) -> String {
        match self {
            Provider::Fallback { dim } => format!("fallback-sha256-d{dim}-t{FALLBACK_TOKENS}"),
            Provider::Remote { url, layer, .. } => format!("remote:{url}#layer={layer}"),
        }
    }

    /// Remote provider from [`SIDECAR_URL_ENV`] when set, otherwise the fallback.
    pub fn from_env(dim: usize, layer: i64) -> Self {
        match std::env::var(SIDECAR_URL_ENV) {
            Ok(url) if !url.trim().is_empty() => Provider::Remote {
                url: url.trim().to_string(),
                layer,
                timeout_secs: default_timeout(),
            },
            _ => Provider::Fallback { dim },
        }
    }
}

/// Embeds `text` with `provider`, without caching.
pub fn embed(text: &str, provider: &Provider) -> Result<ContextEmbedding, EmbedError> {
    if text.trim().is_empty() {
        return Err(EmbedError::EmptyText);
    }
    match provider {
        Provider::Fallback { dim } => Ok(fallback_embed(text, *dim)),
        Provider::Remote { url, layer, timeout_secs } => {
            let mut e = remote_embed(url, text, *layer, Duration::from_secs_f64(timeout_secs.max(0.001)))?;
            e.provider = provider.id();
            Ok(e)
        }
    }
}

/// Provider plus an optional cache and the width the model expects.
#[derive(Clone, Debug)]
pub struct Embedder {
    pub provider: Provider,
    pub cache: Option<EmbeddingCache>,
    pub expected_dim: usize,
}

impl Embedder {
    pub fn fallback(dim: usize) -> Self {
        Self {
            provider: Provider::Fallback { dim },
            cache: None,
            expected_dim: dim,
        }
    }

    pub fn with_cache(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache = Some(EmbeddingCache::new(dir));
        self
    }

    pub fn embed(&self, text: &str) -> Result<ContextEmbedding, EmbedError> {
        let id = self.provider.id();
        if let Some(c) = &self.cache {
            if let Some(e) = c.get(&id, text)? {
                return self.check(e);
            }
        }
        let e = self.check(embed(text, &self.provider)?)?;
        if let Some(c) = &self.cache {
            c.put(&id, text, &e)?;
        }
        Ok(e)
    }

    fn check(&self, e: ContextEmbedding) -> Result<ContextEmbedding, EmbedError> {
        if e.dim != self.expected_dim {
            return Err(EmbedError::DimMismatch {
                expected: self.expected_dim,
                got: e.dim,
            });
        }
        Ok(e)
    }
}

/// Fixed sinusoidal encoding of a progression point `p` in `[0.3, 1]` as one
/// `dim`-wide context token: `sin(pi f_k p)` then `cos(pi f_k p)` with `f_k`
/// geometric from 1 to `dim / 2`.
pub fn progression_token(p: f64, dim: usize) -> Result<Vec<f64>, EmbedError> {
    if !(0.3..=1.0).contains(&p) || !p.is_finite() {
        return Err(EmbedError::Progression(p));
    }
    let half = (dim / 2).max(1);
    let top = half as f64;
    let mut out = vec![0.0; dim];
    for k in 0..half.min(dim) {
        let f = if half == 1 { 1.0 } else { top.powf(k as f64 / (half - 1) as f64) };
        let a = std::f64::consts::PI * f * p;
        out[k] = a.sin();
        if half + k < dim {
            out[half + k] = a.cos();
        }
    }
    Ok(out)
}
