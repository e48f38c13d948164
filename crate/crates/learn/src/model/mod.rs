//! Mesh-agnostic encoder-decoder.
//!
//! Input tokens (positional encoding of each coordinate concatenated with the
//! field values there) are read by a fixed set of learnable latents through
//! cross-attention, refined by pre-norm self-attention blocks, then fused once
//! with the deck context. Decoders read the latents back out: one query per
//! output coordinate for fields, one learned query for scalars.

mod config;
mod posenc;

pub use config::ModelConfig;
pub use posenc::{frequencies, positional_encoding};

use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{load_checkpoint, save_checkpoint, AutodiffError, Graph, ParamStore, Tensor, Var};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model config: {0}")]
    Config(String),
    #[error("token batch is empty")]
    EmptyTokens,
    #[error("query set is empty")]
    EmptyQueries,
    #[error("coordinate {index} = {value:?} is outside the unit square")]
    Coordinate { index: usize, value: [f64; 2] },
    #[error("feature width {got} does not match the configured {expected}")]
    FeatureWidth { expected: usize, got: usize },
    #[error("context width {got} does not match the configured {expected}")]
    ContextDim { expected: usize, got: usize },
    #[error("checkpoint does not match the model: {0}")]
    CheckpointMismatch(String),
    #[error("unknown parameter mask `{0}` (expected `all` or `decoder_only`)")]
    UnknownMask(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

/// Points plus per-point field values.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenBatch {
    pub coords: Vec<[f64; 2]>,
    /// `N x F` row-major.
    pub features: Vec<f64>,
    pub width: usize,
}

impl TokenBatch {
    pub fn new(coords: Vec<[f64; 2]>, features: Vec<f64>, width: usize) -> Result<Self, ModelError> {
        if coords.is_empty() {
            return Err(ModelError::EmptyTokens);
        }
        if width == 0 || features.len() != coords.len() * width {
            return Err(ModelError::FeatureWidth {
                expected: width,
                got: features.len() / coords.len().max(1),
            });
        }
        Ok(Self { coords, features, width })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Named parameter groups; freeze masks act on whole groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Group {
    Encoder,
    Latents,
    Context,
    Decoder,
    FieldHead,
    ScalarHead,
}

impl Group {
    pub fn of(name: &str) -> Option<Group> {
        if name == "latents" {
            Some(Group::Latents)
        } else if name.starts_with("encoder.") {
            Some(Group::Encoder)
        } else if name.starts_with("context.") {
            Some(Group::Context)
        } else if name.starts_with("decoder.") {
            Some(Group::Decoder)
        } else if name.starts_with("head.field.") {
            Some(Group::FieldHead)
        } else if name.starts_with("head.scalar.") {
            Some(Group::ScalarHead)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mask {
    All,
    DecoderOnly,
}

impl FromStr for Mask {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Mask::All),
            "decoder_only" => Ok(Mask::DecoderOnly),
            other => Err(ModelError::UnknownMask(other.to_string())),
        }
    }
}

/// Which parameters a mask leaves trainable.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainableSet {
    pub trainable: Vec<bool>,
    /// Trainable share of all scalar parameters.
    pub fraction: f64,
}

impl TrainableSet {
    pub fn count(&self) -> usize {
        self.trainable.iter().filter(|t| **t).count()
    }
}

pub fn param_groups(params: &ParamStore, mask: Mask) -> TrainableSet {
    let trainable: Vec<bool> = params
        .names()
        .iter()
        .map(|n| match mask {
            Mask::All => true,
            Mask::DecoderOnly => matches!(Group::of(n), Some(Group::Decoder | Group::FieldHead | Group::ScalarHead)),
        })
        .collect();
    let total = params.numel().max(1);
    let on: usize = params.tensors().iter().zip(&trainable).filter(|(_, t)| **t).map(|(p, _)| p.numel()).sum();
    TrainableSet {
        trainable,
        fraction: on as f64 / total as f64,
    }
}

struct Init<'a, R: Rng> {
    store: ParamStore,
    rng: &'a mut R,
}

impl<R: Rng> Init<'_, R> {
    fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize, bias: bool) {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let w = (0..fan_in * fan_out).map(|_| self.rng.random_range(-bound..bound)).collect();
        self.store.insert(&format!("{name}.w"), Tensor { shape: vec![fan_in, fan_out], data: w }).unwrap();
        if bias {
            self.store.insert(&format!("{name}.b"), Tensor::zeros(&[fan_out])).unwrap();
        }
    }

    fn norm(&mut self, name: &str, d: usize) {
        self.store.insert(&format!("{name}.g"), Tensor::vector(vec![1.0; d])).unwrap();
        self.store.insert(&format!("{name}.b"), Tensor::zeros(&[d])).unwrap();
    }

    fn tokens(&mut self, name: &str, rows: usize, d: usize) {
        let data = (0..rows * d)
            .map(|_| {
                let s: f64 = StandardNormal.sample(&mut *self.rng);
                0.02 * s
            })
            .collect();
        self.store.insert(name, Tensor { shape: vec![rows, d], data }).unwrap();
    }

    /// Pre-norm attention sublayer: query norm, key/value norm and projections.
    fn attention(&mut self, name: &str, dq: usize, dkv: usize, d: usize, kv_norm: bool) {
        self.norm(&format!("{name}.ln_q"), dq);
        if kv_norm {
            self.norm(&format!("{name}.ln_kv"), dkv);
        }
        self.linear(&format!("{name}.q"), dq, d, false);
        self.linear(&format!("{name}.k"), dkv, d, false);
        self.linear(&format!("{name}.v"), dkv, d, false);
        self.linear(&format!("{name}.o"), d, d, true);
    }

    fn feed_forward(&mut self, name: &str, d: usize, mult: usize) {
        self.norm(&format!("{name}.ln"), d);
        self.linear(&format!("{name}.fc1"), d, mult * d, true);
        self.linear(&format!("{name}.fc2"), mult * d, d, true);
    }
}

/// Configuration plus parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamStore,
}

impl Model {
    pub fn new<R: Rng>(config: ModelConfig, rng: &mut R) -> Result<Self, ModelError> {
        config.validate()?;
        let c = &config;
        let (de, dd, d_ctx) = (c.d_enc, c.d_dec, c.context_dim);
        let mut init = Init { store: ParamStore::new(), rng };
        init.linear("encoder.input", c.pos_width() + c.in_features, de, true);
        init.tokens("latents", c.n_latents, de);
        init.attention("encoder.cross", de, de, de, true);
        init.feed_forward("encoder.cross.ff", de, c.ff_mult);
        for l in 0..c.n_self_layers {
            init.attention(&format!("encoder.self.{l}"), de, de, de, false);
            init.feed_forward(&format!("encoder.self.{l}.ff"), de, c.ff_mult);
        }
        init.attention("context", de, d_ctx, de, true);
        init.linear("context.progression.k", d_ctx, de, false);
        init.linear("context.progression.v", d_ctx, de, false);
        init.linear("decoder.query", c.pos_width(), dd, true);
        init.attention("decoder.cross", dd, de, dd, true);
        init.feed_forward("decoder.ff", dd, c.ff_mult);
        init.norm("head.field.ln", dd);
        init.linear("head.field.out", dd, 1, true);
        init.tokens("head.scalar.query", 1, dd);
        init.attention("head.scalar.cross", dd, de, dd, true);
        init.norm("head.scalar.ln", dd);
        init.linear("head.scalar.out", dd, 1, true);
        let params = init.store;
        debug_assert!(params.names().iter().all(|n| Group::of(n).is_some()));
        Ok(Self { config, params })
    }

    /// Replaces the parameters with a checkpoint, requiring identical names and shapes.
    pub fn load_params(&mut self, other: ParamStore) -> Result<(), ModelError> {
        if other.len() != self.params.len() {
            return Err(ModelError::CheckpointMismatch(format!(
                "{} tensors in checkpoint, {} in model",
                other.len(),
                self.params.len()
            )));
        }
        for (k, (a, b)) in self.params.names().iter().zip(other.names()).enumerate() {
            let (sa, sb) = (&self.params.tensors()[k].shape, &other.tensors()[k].shape);
            if a != b || sa != sb {
                return Err(ModelError::CheckpointMismatch(format!("model `{a}` {sa:?} vs checkpoint `{b}` {sb:?}")));
            }
        }
        self.params = other;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let cfg = serde_json::to_value(&self.config).map_err(AutodiffError::from)?;
        save_checkpoint(path, &self.params, &cfg)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let ck = load_checkpoint(path)?;
        let config: ModelConfig =
            serde_json::from_value(ck.config).map_err(|e| ModelError::CheckpointMismatch(format!("model config in header: {e}")))?;
        // Build the template for shape checking; its values are discarded.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut m = Model::new(config, &mut rng)?;
        m.load_params(ck.params)?;
        Ok(m)
    }

    /// Predicts a field without recording gradients.
    pub fn predict_field(
        &self,
        tokens: &TokenBatch,
        context: &Tensor,
        progression: Option<&[f64]>,
        queries: &[[f64; 2]],
    ) -> Result<Vec<f64>, ModelError> {
        let mut g = Graph::new();
        let mut f = Forward::frozen(self);
        let z = f.encode(&mut g, tokens)?;
        let z = f.fuse_context(&mut g, z, context, progression)?;
        let y = f.decode_field(&mut g, z, queries)?;
        Ok(g.value(y).data.clone())
    }

    pub fn predict_scalar(&self, tokens: &TokenBatch, context: &Tensor, progression: Option<&[f64]>) -> Result<f64, ModelError> {
        let mut g = Graph::new();
        let mut f = Forward::frozen(self);
        let z = f.encode(&mut g, tokens)?;
        let z = f.fuse_context(&mut g, z, context, progression)?;
        let y = f.decode_scalar(&mut g, z)?;
        Ok(g.value(y).item())
    }
}

/// Binds model parameters to one graph. Trainable parameters become gradient
/// leaves tagged with their parameter id; frozen ones become constants.
pub struct Forward<'m> {
    model: &'m Model,
    trainable: Vec<bool>,
    vars: Vec<Option<Var>>,
}

impl<'m> Forward<'m> {
    pub fn new(model: &'m Model, trainable: &[bool]) -> Self {
        Self {
            model,
            trainable: trainable.to_vec(),
            vars: vec![None; model.params.len()],
        }
    }

    /// Uses `vars[i]` for parameter `i`, for callers that build the leaves themselves.
    pub fn bind(model: &'m Model, vars: &[Var]) -> Self {
        assert_eq!(vars.len(), model.params.len(), "one variable per parameter");
        Self {
            model,
            trainable: vec![true; vars.len()],
            vars: vars.iter().copied().map(Some).collect(),
        }
    }

    /// Everything trainable.
    pub fn all(model: &'m Model) -> Self {
        Self::new(model, &vec![true; model.params.len()])
    }

    /// Nothing trainable.
    pub fn frozen(model: &'m Model) -> Self {
        Self::new(model, &vec![false; model.params.len()])
    }

    fn p(&mut self, g: &mut Graph, name: &str) -> Var {
        let id = self.model.params.id(name).unwrap_or_else(|| panic!("model has no parameter `{name}`"));
        if let Some(v) = self.vars[id] {
            return v;
        }
        let t = &self.model.params.tensors()[id];
        let v = if self.trainable[id] { g.param(t, id) } else { g.constant(t.clone()) };
        self.vars[id] = Some(v);
        v
    }

    fn linear(&mut self, g: &mut Graph, x: Var, name: &str, bias: bool) -> Result<Var, ModelError> {
        let w = self.p(g, &format!("{name}.w"));
        let mut y = g.matmul(x, w)?;
        if bias {
            let b = self.p(g, &format!("{name}.b"));
            y = g.add_bias(y, b)?;
        }
        Ok(y)
    }

    fn norm(&mut self, g: &mut Graph, x: Var, name: &str) -> Result<Var, ModelError> {
        let y = g.layer_norm(x, self.model.config.ln_eps)?;
        let gain = self.p(g, &format!("{name}.g"));
        let bias = self.p(g, &format!("{name}.b"));
        let y = g.mul_cols(y, gain)?;
        Ok(g.add_bias(y, bias)?)
    }

    /// Multi-head scaled dot-product attention on already projected Q, K, V,
    /// followed by the output projection `name.o`.
    fn attend(&mut self, g: &mut Graph, q: Var, k: Var, v: Var, heads: usize, name: &str) -> Result<Var, ModelError> {
        let d = g.value(q).cols();
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let kt = g.transpose(k)?;
        let mut outs = Vec::with_capacity(heads);
        for h in 0..heads {
            let (qh, kth, vh) = if heads == 1 {
                (q, kt, v)
            } else {
                (g.slice_cols(q, h * dh, (h + 1) * dh)?, g.slice_rows(kt, h * dh, (h + 1) * dh)?, g.slice_cols(v, h * dh, (h + 1) * dh)?)
            };
            let s = g.matmul(qh, kth)?;
            let s = g.scale(s, scale);
            let a = g.softmax_rows(s)?;
            outs.push(g.matmul(a, vh)?);
        }
        let o = if heads == 1 { outs[0] } else { g.concat_cols(&outs)? };
        self.linear(g, o, &format!("{name}.o"), true)
    }

    /// Residual pre-norm attention of `x` over `kv`.
    fn cross_block(&mut self, g: &mut Graph, x: Var, kv: Var, heads: usize, name: &str, kv_norm: bool) -> Result<Var, ModelError> {
        let xn = self.norm(g, x, &format!("{name}.ln_q"))?;
        let kvn = if kv_norm { self.norm(g, kv, &format!("{name}.ln_kv"))? } else { xn };
        let q = self.linear(g, xn, &format!("{name}.q"), false)?;
        let k = self.linear(g, kvn, &format!("{name}.k"), false)?;
        let v = self.linear(g, kvn, &format!("{name}.v"), false)?;
        let a = self.attend(g, q, k, v, heads, name)?;
        Ok(g.add(x, a)?)
    }

    fn ff_block(&mut self, g: &mut Graph, x: Var, name: &str) -> Result<Var, ModelError> {
        let h = self.norm(g, x, &format!("{name}.ln"))?;
        let h = self.linear(g, h, &format!("{name}.fc1"), true)?;
        let h = g.gelu(h);
        let h = self.linear(g, h, &format!("{name}.fc2"), true)?;
        Ok(g.add(x, h)?)
    }

    /// Latent encoding `n_latents x d_enc` of a token batch of any size.
    pub fn encode(&mut self, g: &mut Graph, tokens: &TokenBatch) -> Result<Var, ModelError> {
        let c = &self.model.config;
        if tokens.is_empty() {
            return Err(ModelError::EmptyTokens);
        }
        if tokens.width != c.in_features {
            return Err(ModelError::FeatureWidth {
                expected: c.in_features,
                got: tokens.width,
            });
        }
        let (pw, f, n) = (c.pos_width(), c.in_features, tokens.len());
        let pe = positional_encoding(&tokens.coords, c.pos_bands, c.max_freq)?;
        let mut x = Vec::with_capacity(n * (pw + f));
        for i in 0..n {
            x.extend_from_slice(&pe[i * pw..(i + 1) * pw]);
            x.extend_from_slice(&tokens.features[i * f..(i + 1) * f]);
        }
        let x = g.constant(Tensor { shape: vec![n, pw + f], data: x });
        let (cross_heads, self_heads, layers) = (c.enc_cross_heads, c.enc_self_heads, c.n_self_layers);
        let x = self.linear(g, x, "encoder.input", true)?;
        let z = self.p(g, "latents");
        let z = self.cross_block(g, z, x, cross_heads, "encoder.cross", true)?;
        let mut z = self.ff_block(g, z, "encoder.cross.ff")?;
        for l in 0..layers {
            let name = format!("encoder.self.{l}");
            z = self.cross_block(g, z, z, self_heads, &name, false)?;
            z = self.ff_block(g, z, &format!("{name}.ff"))?;
        }
        Ok(z)
    }

    /// Latents attend over the deck context (plus an optional progression token).
    pub fn fuse_context(&mut self, g: &mut Graph, latent: Var, context: &Tensor, progression: Option<&[f64]>) -> Result<Var, ModelError> {
        let c = &self.model.config;
        let (d_ctx, heads) = (c.context_dim, c.context_heads);
        if context.shape.len() != 2 || context.cols() != d_ctx || context.rows() == 0 {
            return Err(ModelError::ContextDim {
                expected: d_ctx,
                got: if context.shape.len() == 2 { context.cols() } else { 0 },
            });
        }
        let ctx = g.constant(context.clone());
        let zn = self.norm(g, latent, "context.ln_q")?;
        let cn = self.norm(g, ctx, "context.ln_kv")?;
        let q = self.linear(g, zn, "context.q", false)?;
        let mut k = self.linear(g, cn, "context.k", false)?;
        let mut v = self.linear(g, cn, "context.v", false)?;
        if let Some(p) = progression {
            if p.len() != d_ctx {
                return Err(ModelError::ContextDim {
                    expected: d_ctx,
                    got: p.len(),
                });
            }
            let pt = g.constant(Tensor {
                shape: vec![1, d_ctx],
                data: p.to_vec(),
            });
            let pk = self.linear(g, pt, "context.progression.k", false)?;
            let pv = self.linear(g, pt, "context.progression.v", false)?;
            k = g.concat_rows(&[k, pk])?;
            v = g.concat_rows(&[v, pv])?;
        }
        let a = self.attend(g, q, k, v, heads, "context")?;
        Ok(g.add(latent, a)?)
    }

    /// One value in (0, 1) per query coordinate, shape `Q x 1`.
    pub fn decode_field(&mut self, g: &mut Graph, latent: Var, queries: &[[f64; 2]]) -> Result<Var, ModelError> {
        let c = &self.model.config;
        if queries.is_empty() {
            return Err(ModelError::EmptyQueries);
        }
        let (pw, heads) = (c.pos_width(), c.dec_cross_heads);
        let pe = positional_encoding(queries, c.pos_bands, c.max_freq)?;
        let q = g.constant(Tensor {
            shape: vec![queries.len(), pw],
            data: pe,
        });
        let h = self.linear(g, q, "decoder.query", true)?;
        let h = self.cross_block(g, h, latent, heads, "decoder.cross", true)?;
        let h = self.ff_block(g, h, "decoder.ff")?;
        let h = self.norm(g, h, "head.field.ln")?;
        let y = self.linear(g, h, "head.field.out", true)?;
        Ok(g.sigmoid(y))
    }

    /// A single unbounded value, shape `1 x 1`.
    pub fn decode_scalar(&mut self, g: &mut Graph, latent: Var) -> Result<Var, ModelError> {
        let heads = self.model.config.dec_cross_heads;
        let q = self.p(g, "head.scalar.query");
        let h = self.cross_block(g, q, latent, heads, "head.scalar.cross", true)?;
        let h = self.norm(g, h, "head.scalar.ln")?;
        self.linear(g, h, "head.scalar.out", true)
    }
}
