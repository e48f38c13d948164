//! Training samples and their on-disk formats.
//!
//! Arrays are `f32` on disk and in records; compute code widens to `f64`.

mod shard;
mod split;
mod unstructured;

pub use shard::{decode_shard, encode_shard, read_shard, read_shard_index, write_shard, write_shard_index, ShardError, ShardIndex, ShardIndexEntry};
pub use split::{split, split_keys, Split, SplitError};
pub use unstructured::{ingest_unstructured, ingest_unstructured_bytes, write_unstructured, IngestError, UnstructuredHeader};

use serde::{Deserialize, Serialize};

use crate::deck::{progression_points, render_deck_with, DeckError, DeckMeta, Loading, SimulationKind, Target};
use crate::material::MaterialRegistry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Rulebased,
    Phasefield,
    External,
}

impl Source {
    pub fn simulation(&self) -> SimulationKind {
        match self {
            Source::Rulebased => SimulationKind::RuleBased,
            Source::Phasefield => SimulationKind::PhaseField,
            Source::External => SimulationKind::DiscreteFiniteElement,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Source,
    pub seed: u64,
    pub material: String,
    pub loading: Loading,
    /// Simulator variant (the surrogate's growth mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
}

/// Ten fields at the progression points `0.3 + 0.7 k / 9`.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshots {
    pub points: [f32; 10],
    pub fields: Vec<Vec<f32>>,
}

impl Snapshots {
    pub fn new(fields: Vec<Vec<f32>>) -> Self {
        assert_eq!(fields.len(), 10, "exactly ten snapshots");
        let mut points = [0f32; 10];
        for (p, q) in points.iter_mut().zip(progression_points()) {
            *p = q as f32;
        }
        Self { points, fields }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Targets {
    pub final_field: Vec<f32>,
    pub failure_time: Option<f32>,
    /// The run ended without meeting its failure criterion.
    pub censored: bool,
    pub snapshots: Option<Snapshots>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub deck_text: String,
    /// Normalised coordinates in `[0, 1]^2`.
    pub coords: Vec<[f32; 2]>,
    pub input_field: Vec<f32>,
    pub targets: Targets,
    pub provenance: Provenance,
    /// `(nx, ny)` when the tokens are the cells of a structured grid.
    pub grid: Option<(u32, u32)>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RecordError {
    #[error("record arrays disagree: {0}")]
    Length(String),
    #[error("record contains a non-finite value in `{0}`")]
    NonFinite(&'static str),
    #[error("coordinate {index} = {value:?} is outside the unit square")]
    Coordinate { index: usize, value: [f32; 2] },
}

impl SampleRecord {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        let n = self.coords.len();
        if self.input_field.len() != n || self.targets.final_field.len() != n {
            return Err(RecordError::Length(format!(
                "coords {n}, input {}, final {}",
                self.input_field.len(),
                self.targets.final_field.len()
            )));
        }
        if let Some(s) = &self.targets.snapshots {
            if s.fields.len() != 10 || s.fields.iter().any(|f| f.len() != n) {
                return Err(RecordError::Length("snapshots must be 10 fields of the token count".into()));
            }
        }
        if let Some((nx, ny)) = self.grid {
            if (nx as usize) * (ny as usize) != n {
                return Err(RecordError::Length(format!("grid {nx}x{ny} vs {n} tokens")));
            }
        }
        for (k, c) in self.coords.iter().enumerate() {
            if !(c[0].is_finite() && c[1].is_finite()) {
                return Err(RecordError::NonFinite("coords"));
            }
            if !(0.0..=1.0).contains(&c[0]) || !(0.0..=1.0).contains(&c[1]) {
                return Err(RecordError::Coordinate { index: k, value: *c });
            }
        }
        if self.input_field.iter().any(|v| !v.is_finite()) {
            return Err(RecordError::NonFinite("input_field"));
        }
        if self.targets.final_field.iter().any(|v| !v.is_finite()) {
            return Err(RecordError::NonFinite("final_field"));
        }
        if matches!(self.targets.failure_time, Some(t) if !t.is_finite()) {
            return Err(RecordError::NonFinite("failure_time"));
        }
        Ok(())
    }

    /// Deck metadata for this record with the requested prediction target.
    pub fn deck_meta(&self, target: Target, progression: Option<f64>) -> DeckMeta {
        DeckMeta {
            simulation: self.provenance.source.simulation(),
            material: self.provenance.material.clone(),
            boundary: self.provenance.loading,
            target,
            variant: self.provenance.variant.clone(),
            progression,
        }
    }

    pub fn render_deck_for(&self, target: Target, progression: Option<f64>, registry: &MaterialRegistry) -> Result<String, DeckError> {
        render_deck_with(&self.deck_meta(target, progression), registry)
    }

    /// Stratification key used by [`split`].
    pub fn stratum(&self) -> (String, Loading) {
        (self.provenance.material.to_lowercase(), self.provenance.loading)
    }
}

/// Structured-grid record with tokens at the normalised cell centres.
pub fn structured_coords(nx: usize, ny: usize) -> Vec<[f32; 2]> {
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push([((i as f64 + 0.5) / nx as f64) as f32, ((j as f64 + 0.5) / ny as f64) as f32]);
        }
    }
    out
}
