//! Conversion of [`SampleRecord`]s into model-ready examples.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::autodiff::Tensor;
use crate::embed::{progression_token, Embedder};
use crate::model::TokenBatch;
use fracture_core::dataset::SampleRecord;
use fracture_core::deck::{DeckMeta, Target};
use fracture_core::MaterialRegistry;

/// What a training example asks the model to predict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Final damage field at every token.
    Field,
    /// Field at each progression point, conditioned on that point.
    Temporal,
    /// Standardized failure time from the scalar head.
    TimeToFailure,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExampleTarget {
    Field(Vec<f64>),
    Scalar(f64),
}

/// A record prepared for one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub tokens: TokenBatch,
    pub context: Tensor,
    pub progression: Option<Vec<f64>>,
    pub queries: Vec<[f64; 2]>,
    pub target: ExampleTarget,
    /// Stratification key: lowercase material name.
    pub material: String,
}

/// Deck embeddings keyed by text, so each distinct deck is embedded once.
#[derive(Clone, Debug)]
pub struct ContextCache {
    embedder: Embedder,
    registry: MaterialRegistry,
    cache: HashMap<String, Tensor>,
}

impl ContextCache {
    pub fn new(embedder: Embedder) -> Self {
        Self::with_registry(embedder, MaterialRegistry::with_defaults())
    }

    pub fn with_registry(embedder: Embedder, registry: MaterialRegistry) -> Self {
        Self {
            embedder,
            registry,
            cache: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.embedder.expected_dim
    }

    pub fn registry(&self) -> &MaterialRegistry {
        &self.registry
    }

    pub fn context(&mut self, text: &str) -> Result<Tensor, TrainError> {
        if let Some(t) = self.cache.get(text) {
            return Ok(t.clone());
        }
        let e = self.embedder.embed(text)?;
        let t = Tensor::new(vec![e.tokens, e.dim], e.to_f64())?;
        self.cache.insert(text.to_string(), t.clone());
        Ok(t)
    }

    fn deck(&self, meta: &DeckMeta) -> Result<String, TrainError> {
        fracture_core::deck::render_deck_with(meta, &self.registry).map_err(|e| TrainError::Data(e.to_string()))
    }
}

fn tokens_of(record: &SampleRecord) -> Result<(TokenBatch, Vec<[f64; 2]>), TrainError> {
    record.validate().map_err(|e| TrainError::Data(e.to_string()))?;
    let coords: Vec<[f64; 2]> = record.coords.iter().map(|c| [c[0] as f64, c[1] as f64]).collect();
    let features = record.input_field.iter().map(|v| *v as f64).collect();
    Ok((TokenBatch::new(coords.clone(), features, 1)?, coords))
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|x| *x as f64).collect()
}

/// Final-field example using the deck text stored in the record.
pub fn field_example(record: &SampleRecord, ctx: &mut ContextCache) -> Result<Example, TrainError> {
    let (tokens, queries) = tokens_of(record)?;
    Ok(Example {
        tokens,
        context: ctx.context(&record.deck_text)?,
        progression: None,
        queries,
        target: ExampleTarget::Field(widen(&record.targets.final_field)),
        material: record.provenance.material.to_lowercase(),
    })
}

/// The ten progression examples of a record with snapshots.
pub fn temporal_examples(record: &SampleRecord, ctx: &mut ContextCache) -> Result<Vec<Example>, TrainError> {
    let snaps = record
        .targets
        .snapshots
        .as_ref()
        .ok_or_else(|| TrainError::Data(format!("temporal task needs snapshots; record with seed {} has none", record.provenance.seed)))?;
    let (tokens, queries) = tokens_of(record)?;
    let points = fracture_core::deck::progression_points();
    let mut out = Vec::with_capacity(points.len());
    for (k, p) in points.iter().enumerate() {
        let text = ctx.deck(&record.deck_meta(Target::DynamicTrajectory, Some(*p)))?;
        out.push(Example {
            tokens: tokens.clone(),
            context: ctx.context(&text)?,
            progression: Some(progression_token(*p, ctx.dim())?),
            queries: queries.clone(),
            target: ExampleTarget::Field(widen(&snaps.fields[k])),
            material: record.provenance.material.to_lowercase(),
        });
    }
    Ok(out)
}

/// Per-material standardization of failure times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtfScaler {
    pub stats: HashMap<String, (f64, f64)>,
}

impl TtfScaler {
    /// Fits mean and standard deviation per material on uncensored records.
    pub fn fit(records: &[SampleRecord]) -> Result<Self, TrainError> {
        let mut acc: HashMap<String, Vec<f64>> = HashMap::new();
        for r in records {
            if let (Some(t), false) = (r.targets.failure_time, r.targets.censored) {
                acc.entry(r.provenance.material.to_lowercase()).or_default().push(t as f64);
            }
        }
        if acc.is_empty() {
            return Err(TrainError::Data("no uncensored failure times to fit".into()));
        }
        let stats = acc
            .into_iter()
            .map(|(m, v)| {
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
                (m, (mean, if sd > 1e-12 { sd } else { 1.0 }))
            })
            .collect();
        Ok(Self { stats })
    }

    fn get(&self, material: &str) -> Result<(f64, f64), TrainError> {
        self.stats
            .get(&material.to_lowercase())
            .copied()
            .ok_or_else(|| TrainError::Data(format!("no failure-time statistics for material `{material}`")))
    }

    pub fn forward(&self, material: &str, t: f64) -> Result<f64, TrainError> {
        let (m, s) = self.get(material)?;
        Ok((t - m) / s)
    }

    pub fn inverse(&self, material: &str, z: f64) -> Result<f64, TrainError> {
        let (m, s) = self.get(material)?;
        Ok(m + s * z)
    }
}

/// Time-to-failure example with a standardized target; censored records are rejected.
pub fn ttf_example(record: &SampleRecord, ctx: &mut ContextCache, scaler: &TtfScaler) -> Result<Example, TrainError> {
    let t = match (record.targets.failure_time, record.targets.censored) {
        (Some(t), false) => t as f64,
        _ => {
            return Err(TrainError::Data(format!(
                "time-to-failure task needs an uncensored failure time; record with seed {} has none",
                record.provenance.seed
            )))
        }
    };
    let (tokens, _) = tokens_of(record)?;
    let text = ctx.deck(&record.deck_meta(Target::TimeToFailure, None))?;
    Ok(Example {
        tokens,
        context: ctx.context(&text)?,
        progression: None,
        queries: Vec::new(),
        target: ExampleTarget::Scalar(scaler.forward(&record.provenance.material, t)?),
        material: record.provenance.material.to_lowercase(),
    })
}
