use serde::{Deserialize, Serialize};

use super::ModelError;

/// Shape of the encoder-decoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Field values per input token.
    pub in_features: usize,
    pub d_enc: usize,
    pub d_dec: usize,
    pub n_latents: usize,
    pub n_self_layers: usize,
    pub enc_cross_heads: usize,
    pub enc_self_heads: usize,
    pub dec_cross_heads: usize,
    /// Heads of the context fusion attention.
    pub context_heads: usize,
    pub pos_bands: usize,
    /// Highest positional frequency; the grid resolution is its Nyquist limit.
    pub max_freq: f64,
    /// Width of context embedding rows.
    pub context_dim: usize,
    /// Feed-forward hidden width as a multiple of the channel count.
    pub ff_mult: usize,
    pub ln_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            in_features: 1,
            d_enc: 64,
            d_dec: 64,
            n_latents: 64,
            n_self_layers: 3,
            enc_cross_heads: 2,
            enc_self_heads: 2,
            dec_cross_heads: 1,
            context_heads: 2,
            pos_bands: 32,
            max_freq: 64.0,
            context_dim: crate::embed::DEFAULT_CONTEXT_DIM,
            ff_mult: 2,
            ln_eps: 1e-5,
        }
    }
}

impl ModelConfig {
    /// Width of the positional encoding: sin and cos per band and axis plus the raw coordinates.
    pub fn pos_width(&self) -> usize {
        4 * self.pos_bands + 2
    }

    /// A small configuration for tests and toy training runs.
    pub fn tiny(max_freq: f64) -> Self {
        Self {
            d_enc: 16,
            d_dec: 16,
            n_latents: 8,
            n_self_layers: 1,
            pos_bands: 4,
            max_freq,
            context_dim: 8,
            ..Self::default()
        }
    }

    /// The scale-up shape with `d` channels and `layers` self-attention layers.
    pub fn paper_shaped(d: usize, layers: usize) -> Self {
        Self {
            d_enc: d,
            d_dec: d,
            n_latents: 2048,
            n_self_layers: layers,
            max_freq: 128.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        for (name, v) in [
            ("in_features", self.in_features),
            ("d_enc", self.d_enc),
            ("d_dec", self.d_dec),
            ("n_latents", self.n_latents),
            ("pos_bands", self.pos_bands),
            ("context_dim", self.context_dim),
            ("ff_mult", self.ff_mult),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        for (name, d, h) in [
            ("enc_cross_heads", self.d_enc, self.enc_cross_heads),
            ("enc_self_heads", self.d_enc, self.enc_self_heads),
            ("context_heads", self.d_enc, self.context_heads),
            ("dec_cross_heads", self.d_dec, self.dec_cross_heads),
        ] {
            if h == 0 || d % h != 0 {
                return bad(format!("{name} = {h} does not divide the channel count {d}"));
            }
        }
        if !(self.max_freq >= 1.0 && self.max_freq.is_finite()) {
            return bad(format!("max_freq must be >= 1, got {}", self.max_freq));
        }
        if !(self.ln_eps >= 0.0 && self.ln_eps.is_finite()) {
            return bad(format!("ln_eps must be >= 0, got {}", self.ln_eps));
        }
        Ok(())
    }
}
