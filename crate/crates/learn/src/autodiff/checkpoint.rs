//! Parameter file: `u64` little-endian header length, a JSON header, then every
//! tensor's values as little-endian `f64` in header order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AutodiffError, ParamStore, Tensor};

pub const CHECKPOINT_FORMAT: &str = "fracture-params";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
    #[serde(default)]
    config: serde_json::Value,
}

/// Parameters plus the opaque model configuration stored with them.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ParamStore,
    pub config: serde_json::Value,
}

pub fn write_checkpoint<W: Write>(mut w: W, params: &ParamStore, config: &serde_json::Value) -> Result<(), AutodiffError> {
    let header = Header {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        names: params.names().to_vec(),
        shapes: params.tensors().iter().map(|t| t.shape.clone()).collect(),
        config: config.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(params.numel() * 8);
    for t in params.tensors() {
        for v in &t.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint, AutodiffError> {
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len);
    if len > 64 << 20 {
        return Err(AutodiffError::Checkpoint(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(AutodiffError::Checkpoint(format!("unknown format `{}`", header.format)));
    }
    if header.version != CHECKPOINT_VERSION {
        return Err(AutodiffError::Checkpoint(format!("unsupported version {}", header.version)));
    }
    if header.names.len() != header.shapes.len() {
        return Err(AutodiffError::Checkpoint("names and shapes differ in length".into()));
    }
    let mut params = ParamStore::new();
    for (name, shape) in header.names.iter().zip(header.shapes) {
        let n: usize = shape.iter().product();
        let mut bytes = vec![0u8; n * 8];
        r.read_exact(&mut bytes).map_err(|e| AutodiffError::Checkpoint(format!("tensor `{name}`: {e}")))?;
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        params.insert(name, Tensor { shape, data })?;
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(AutodiffError::Checkpoint("trailing bytes after the last tensor".into()));
    }
    Ok(Checkpoint {
        params,
        config: header.config,
    })
}

/// Writes through a temporary file and renames it into place.
pub fn save_checkpoint(path: &Path, params: &ParamStore, config: &serde_json::Value) -> Result<(), AutodiffError> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, params, config)?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &buf)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, AutodiffError> {
    read_checkpoint(std::io::BufReader::new(fs::File::open(path)?))
}
