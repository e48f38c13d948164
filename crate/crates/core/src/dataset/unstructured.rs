//! Ingestion of samples defined on unstructured meshes.
//!
//! Tokens sit at mesh edge centres, where a discrete-element solver reports
//! damage. The file is:
//!
//! ```text
//! u64                 header length
//! header JSON         {"bounds": [xmin, ymin, xmax, ymax], "n_edges": N,
//!                      "fields": [["x", "f64"], ["y", "f64"], ["initial_damage", "f32"], ["damage", "f32"]],
//!                      "material": "pbx", "loading": "axial", "seed": 0, "failure_time": null}
//! arrays              each field in header order, N little-endian values of its dtype
//! ```
//!
//! `x`, `y`, `initial_damage` and `damage` are required; other fields are skipped.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Provenance, SampleRecord, Source, Targets};
use crate::deck::{render_deck_with, DeckMeta, Loading, Target};
use crate::material::MaterialRegistry;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("field `{field}` has unsupported dtype `{dtype}` (expected f32 or f64)")]
    Dtype { field: String, dtype: String },
    #[error("edge {index}: coordinate ({x}, {y}) is outside the declared bounds {bounds:?}")]
    OutOfBounds { index: usize, x: f64, y: f64, bounds: [f64; 4] },
    #[error("field `{field}` has a non-finite value at edge {index}")]
    NonFinite { field: String, index: usize },
    #[error("bounds {0:?} are degenerate")]
    Bounds([f64; 4]),
    #[error("file is truncated: {0}")]
    Truncated(String),
    #[error("header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("deck: {0}")]
    Deck(#[from] crate::deck::DeckError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnstructuredHeader {
    pub bounds: [f64; 4],
    pub n_edges: u64,
    pub fields: Vec<(String, String)>,
    #[serde(default = "default_material")]
    pub material: String,
    #[serde(default = "default_loading")]
    pub loading: Loading,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub failure_time: Option<f32>,
}

fn default_material() -> String {
    "pbx".into()
}

fn default_loading() -> Loading {
    Loading::Axial
}

const REQUIRED: [&str; 4] = ["x", "y", "initial_damage", "damage"];

pub fn ingest_unstructured(path: impl AsRef<Path>) -> Result<SampleRecord, IngestError> {
    ingest_unstructured_bytes(&std::fs::read(path)?)
}

pub fn ingest_unstructured_bytes(bytes: &[u8]) -> Result<SampleRecord, IngestError> {
    let registry = MaterialRegistry::with_defaults();
    if bytes.len() < 8 {
        return Err(IngestError::Truncated("no header length".into()));
    }
    let hlen = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    let header_bytes = bytes
        .get(8..8 + hlen)
        .ok_or_else(|| IngestError::Truncated("header".into()))?;
    let header: UnstructuredHeader = serde_json::from_slice(header_bytes)?;
    let [xmin, ymin, xmax, ymax] = header.bounds;
    if !(xmax > xmin && ymax > ymin && header.bounds.iter().all(|b| b.is_finite())) {
        return Err(IngestError::Bounds(header.bounds));
    }
    let n = header.n_edges as usize;

    let mut pos = 8 + hlen;
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, dtype) in &header.fields {
        let width = match dtype.as_str() {
            "f32" => 4,
            "f64" => 8,
            _ => {
                return Err(IngestError::Dtype {
                    field: name.clone(),
                    dtype: dtype.clone(),
                })
            }
        };
        let raw = bytes
            .get(pos..pos + width * n)
            .ok_or_else(|| IngestError::Truncated(format!("field `{name}`")))?;
        pos += width * n;
        let vals: Vec<f64> = if width == 4 {
            raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect()
        } else {
            raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()
        };
        if let Some(k) = vals.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::NonFinite { field: name.clone(), index: k });
        }
        columns.push((name.clone(), vals));
    }
    let col = |name: &str| -> Result<&Vec<f64>, IngestError> {
        columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
            .ok_or_else(|| IngestError::MissingField(name.to_string()))
    };
    for r in REQUIRED {
        col(r)?;
    }
    let (xs, ys) = (col("x")?, col("y")?);
    let tol = 1e-9 * (xmax - xmin).max(ymax - ymin);
    let mut coords = Vec::with_capacity(n);
    for k in 0..n {
        let (x, y) = (xs[k], ys[k]);
        if x < xmin - tol || x > xmax + tol || y < ymin - tol || y > ymax + tol {
            return Err(IngestError::OutOfBounds {
                index: k,
                x,
                y,
                bounds: header.bounds,
            });
        }
        coords.push([
            ((x - xmin) / (xmax - xmin)).clamp(0.0, 1.0) as f32,
            ((y - ymin) / (ymax - ymin)).clamp(0.0, 1.0) as f32,
        ]);
    }
    let to_f32 = |v: &Vec<f64>| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
    let meta = DeckMeta::new(crate::deck::SimulationKind::DiscreteFiniteElement, &header.material, header.loading, Target::FracturePattern);
    let deck_text = render_deck_with(&meta, &registry)?;
    Ok(SampleRecord {
        deck_text,
        coords,
        input_field: to_f32(col("initial_damage")?),
        targets: Targets {
            final_field: to_f32(col("damage")?),
            failure_time: header.failure_time,
            censored: false,
            snapshots: None,
        },
        provenance: Provenance {
            source: Source::External,
            seed: header.seed,
            material: header.material.to_lowercase(),
            loading: header.loading,
            variant: None,
        },
        grid: None,
    })
}

/// Writes an unstructured sample file. `columns` must follow `header.fields`.
pub fn write_unstructured(header: &UnstructuredHeader, columns: &[Vec<f64>]) -> Vec<u8> {
    assert_eq!(header.fields.len(), columns.len());
    let h = serde_json::to_vec(header).expect("header serialises");
    let mut out = Vec::new();
    out.extend_from_slice(&(h.len() as u64).to_le_bytes());
    out.extend_from_slice(&h);
    for ((_, dtype), col) in header.fields.iter().zip(columns) {
        assert_eq!(col.len() as u64, header.n_edges);
        for &v in col {
            match dtype.as_str() {
                "f32" => out.extend_from_slice(&(v as f32).to_le_bytes()),
                _ => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    out
}
