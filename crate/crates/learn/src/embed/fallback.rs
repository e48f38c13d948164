use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::{text_hash, ContextEmbedding, Provider};

/// Context length of the fallback embedder.
pub const FALLBACK_TOKENS: usize = 32;
pub const PAD_TOKEN: &str = "<pad>";

fn token_vector(token: &str, position: usize, dim: usize) -> Vec<f32> {
    let mut h = Sha256::new();
    h.update(b"fracture-fallback-embed\0");
    h.update((position as u64).to_le_bytes());
    h.update(token.as_bytes());
    let seed: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = dim as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let s = if var > 0.0 { var.sqrt() } else { 1.0 };
    for x in &mut v {
        *x = (*x - mean) / s;
    }
    v.into_iter().map(|x| x as f32).collect()
}

/// Deterministic offline embedding: whitespace tokens, truncated or padded to
/// [`FALLBACK_TOKENS`], each mapped to a zero-mean unit-variance vector.
pub fn fallback_embed(text: &str, dim: usize) -> ContextEmbedding {
    let mut words: Vec<&str> = text.split_whitespace().take(FALLBACK_TOKENS).collect();
    words.resize(FALLBACK_TOKENS, PAD_TOKEN);
    let mut data = Vec::with_capacity(FALLBACK_TOKENS * dim);
    for (pos, w) in words.iter().enumerate() {
        data.extend(token_vector(w, pos, dim));
    }
    ContextEmbedding {
        tokens: FALLBACK_TOKENS,
        dim,
        data,
        provider: Provider::Fallback { dim }.id(),
        text_hash: text_hash(text),
    }
}
