//! Binary shard container.
//!
//! ```text
//! "FRSHARD\0"            8-byte magic
//! u32                    format version
//! u64 + bytes            header JSON (version, record count, field and dtype maps)
//! records                per record: u32 meta length, meta JSON, then arrays
//! index                  per record: u64 offset, u64 length, u32 CRC-32 of the record
//! u64                    index offset
//! u32                    CRC-32 of every preceding byte
//! ```
//!
//! Record arrays, in order: coords (2N f32), input field (N f32), final field
//! (N f32), then `u8 censored + f32 failure time` when the shard carries a
//! failure-time column, then 10N f32 snapshots when it carries snapshots.
//! All integers and floats are little-endian.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Provenance, SampleRecord, Snapshots, Targets};

const MAGIC: &[u8; 8] = b"FRSHARD\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ShardError {
    #[error("shard is corrupt near byte offset {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },
    #[error("record {index} does not match the shard schema: {reason}")]
    SchemaDrift { index: usize, reason: String },
    #[error("record {index} is invalid: {source}")]
    InvalidRecord {
        index: usize,
        #[source]
        source: super::RecordError,
    },
    #[error("unsupported shard format version {0}")]
    Version(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Schema {
    failure_time: bool,
    snapshots: bool,
}

impl Schema {
    fn of(r: &SampleRecord) -> Self {
        Self {
            failure_time: r.targets.failure_time.is_some() || r.targets.censored,
            snapshots: r.targets.snapshots.is_some(),
        }
    }

    fn fields(&self) -> Vec<&'static str> {
        let mut f = vec!["coords", "input_field", "final_field"];
        if self.failure_time {
            f.push("failure_time");
        }
        if self.snapshots {
            f.push("snapshots");
        }
        f
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    record_count: u64,
    fields: Vec<String>,
    dtypes: BTreeMap<String, String>,
    byte_order: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordMeta {
    deck_text: String,
    n: u64,
    provenance: Provenance,
    #[serde(default)]
    grid: Option<(u32, u32)>,
}

fn put_f32s(buf: &mut Vec<u8>, xs: impl IntoIterator<Item = f32>) {
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

fn encode_record(r: &SampleRecord, schema: &Schema) -> Result<Vec<u8>, ShardError> {
    let meta = RecordMeta {
        deck_text: r.deck_text.clone(),
        n: r.coords.len() as u64,
        provenance: r.provenance.clone(),
        grid: r.grid,
    };
    let meta = serde_json::to_vec(&meta)?;
    let mut buf = Vec::with_capacity(4 + meta.len() + 16 * r.coords.len());
    buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    buf.extend_from_slice(&meta);
    put_f32s(&mut buf, r.coords.iter().flat_map(|c| [c[0], c[1]]));
    put_f32s(&mut buf, r.input_field.iter().copied());
    put_f32s(&mut buf, r.targets.final_field.iter().copied());
    if schema.failure_time {
        buf.push(r.targets.censored as u8);
        put_f32s(&mut buf, [r.targets.failure_time.unwrap_or(0.0)]);
    }
    if let Some(s) = &r.targets.snapshots {
        put_f32s(&mut buf, s.fields.iter().flatten().copied());
    }
    Ok(buf)
}

/// Serialises records into a shard byte buffer.
pub fn encode_shard(records: &[SampleRecord]) -> Result<Vec<u8>, ShardError> {
    let schema = records.first().map(Schema::of).unwrap_or(Schema {
        failure_time: false,
        snapshots: false,
    });
    for (k, r) in records.iter().enumerate() {
        r.validate().map_err(|source| ShardError::InvalidRecord { index: k, source })?;
        let s = Schema::of(r);
        if s != schema {
            return Err(ShardError::SchemaDrift {
                index: k,
                reason: format!("fields {:?} differ from the shard's {:?}", s.fields(), schema.fields()),
            });
        }
    }
    let fields: Vec<String> = schema.fields().iter().map(|s| s.to_string()).collect();
    let mut dtypes: BTreeMap<String, String> = fields.iter().map(|f| (f.clone(), "f32".to_string())).collect();
    if schema.failure_time {
        dtypes.insert("failure_time".into(), "u8+f32".into());
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        record_count: records.len() as u64,
        fields,
        dtypes,
        byte_order: "little".into(),
    };
    let header = serde_json::to_vec(&header)?;

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    let mut index = Vec::with_capacity(records.len());
    for r in records {
        let blob = encode_record(r, &schema)?;
        index.push((out.len() as u64, blob.len() as u64, crc32fast::hash(&blob)));
        out.extend_from_slice(&blob);
    }
    let index_offset = out.len() as u64;
    for (off, len, crc) in &index {
        out.extend_from_slice(&off.to_le_bytes());
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&crc.to_le_bytes());
    }
    out.extend_from_slice(&index_offset.to_le_bytes());
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Writes atomically: the shard is assembled in a sibling temp file and renamed.
pub fn write_shard(records: &[SampleRecord], path: impl AsRef<Path>) -> Result<(), ShardError> {
    let path = path.as_ref();
    let bytes = encode_shard(records)?;
    let tmp = path.with_extension("tmp-shard");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_shard(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>, ShardError> {
    let bytes = std::fs::read(path)?;
    decode_shard(&bytes)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    base: u64,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ShardError> {
        if self.pos + n > self.buf.len() {
            return Err(ShardError::Corrupt {
                offset: self.base + self.pos as u64,
                reason: "truncated".into(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ShardError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ShardError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ShardError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, ShardError> {
        let raw = self.take(4 * n)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn corrupt(offset: u64, reason: impl Into<String>) -> ShardError {
    ShardError::Corrupt {
        offset,
        reason: reason.into(),
    }
}

pub fn decode_shard(bytes: &[u8]) -> Result<Vec<SampleRecord>, ShardError> {
    if bytes.len() < MAGIC.len() + 4 + 8 + 8 + 4 || &bytes[..8] != MAGIC {
        return Err(corrupt(0, "missing shard magic"));
    }
    let mut c = Cursor { buf: bytes, pos: 8, base: 0 };
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(ShardError::Version(version));
    }
    let body_end = bytes.len() - 4;
    let stored_crc = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
    let file_ok = crc32fast::hash(&bytes[..body_end]) == stored_crc;
    let index_offset = u64::from_le_bytes(bytes[body_end - 8..body_end].try_into().unwrap());

    let header_len = c.u64()? as usize;
    let header_start = c.pos as u64;
    let header: Header = match c.take(header_len).ok().and_then(|h| serde_json::from_slice(h).ok()) {
        Some(h) => h,
        None => return Err(corrupt(header_start, "unreadable header")),
    };
    let n_rec = header.record_count as usize;
    let index_len = n_rec.checked_mul(20).ok_or_else(|| corrupt(header_start, "absurd record count"))?;
    if index_offset as usize + index_len != body_end - 8 || (index_offset as usize) < c.pos {
        return Err(corrupt(index_offset.min(body_end as u64), "index does not fit the file"));
    }
    let schema = Schema {
        failure_time: header.fields.iter().any(|f| f == "failure_time"),
        snapshots: header.fields.iter().any(|f| f == "snapshots"),
    };

    let mut ic = Cursor {
        buf: &bytes[index_offset as usize..body_end - 8],
        pos: 0,
        base: index_offset,
    };
    let mut entries = Vec::with_capacity(n_rec);
    let mut prev_end = c.pos as u64;
    for _ in 0..n_rec {
        let (off, len, crc) = (ic.u64()?, ic.u64()?, ic.u32()?);
        if off < prev_end || off + len > index_offset {
            return Err(corrupt(off, "record offsets are not strictly increasing within the payload"));
        }
        prev_end = off + len;
        entries.push((off, len, crc));
    }
    for &(off, len, crc) in &entries {
        let blob = &bytes[off as usize..(off + len) as usize];
        if crc32fast::hash(blob) != crc {
            return Err(corrupt(off, "record checksum mismatch"));
        }
    }
    if !file_ok {
        return Err(corrupt(0, "file checksum mismatch outside the record payload"));
    }

    let mut records = Vec::with_capacity(n_rec);
    for &(off, len, _) in &entries {
        let blob = &bytes[off as usize..(off + len) as usize];
        let mut rc = Cursor { buf: blob, pos: 0, base: off };
        let meta_len = rc.u32()? as usize;
        let meta: RecordMeta = serde_json::from_slice(rc.take(meta_len)?).map_err(|e| corrupt(off, e.to_string()))?;
        let n = meta.n as usize;
        let flat = rc.f32s(2 * n)?;
        let coords = flat.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
        let input_field = rc.f32s(n)?;
        let final_field = rc.f32s(n)?;
        let (failure_time, censored) = if schema.failure_time {
            let censored = rc.u8()? != 0;
            let t = rc.f32s(1)?[0];
            (if censored { None } else { Some(t) }, censored)
        } else {
            (None, false)
        };
        let snapshots = if schema.snapshots {
            let fields = (0..10).map(|_| rc.f32s(n)).collect::<Result<Vec<_>, _>>()?;
            Some(Snapshots::new(fields))
        } else {
            None
        };
        if rc.pos != blob.len() {
            return Err(corrupt(off, "record has trailing bytes"));
        }
        records.push(SampleRecord {
            deck_text: meta.deck_text,
            coords,
            input_field,
            targets: Targets {
                final_field,
                failure_time,
                censored,
                snapshots,
            },
            provenance: meta.provenance,
            grid: meta.grid,
        });
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShardIndexEntry {
    pub path: PathBuf,
    pub records: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShardIndex {
    pub shards: Vec<ShardIndexEntry>,
}

impl ShardIndex {
    pub fn total_records(&self) -> u64 {
        self.shards.iter().map(|s| s.records).sum()
    }
}

pub fn write_shard_index(index: &ShardIndex, path: impl AsRef<Path>) -> Result<(), ShardError> {
    std::fs::write(path, serde_json::to_string_pretty(index)?)?;
    Ok(())
}

pub fn read_shard_index(path: impl AsRef<Path>) -> Result<ShardIndex, ShardError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
