//! Manifest loading, reproducibility stamps and shard I/O shared by commands.

use std::path::{Path, PathBuf};

use anyhow::Context;
use fracture_core::dataset::{read_shard, write_shard, write_shard_index, SampleRecord, ShardIndex, ShardIndexEntry};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Invalid};

pub struct RunContext {
    pub workers: usize,
}

impl RunContext {
    pub fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

/// A parsed manifest with the SHA-256 of its exact bytes.
pub struct Loaded<T> {
    pub value: T,
    pub sha256: String,
}

pub fn load_manifest<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Loaded<T>> {
    let bytes = std::fs::read(path).map_err(|e| invalid(format!("cannot read manifest {}: {e}", path.display())))?;
    let value = serde_json::from_slice(&bytes).map_err(|e| invalid(format!("manifest {}: {e}", path.display())))?;
    let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { value, sha256 })
}

#[derive(Serialize)]
struct Stamp<'a> {
    command: &'a str,
    manifest_sha256: &'a str,
    seed: Option<u64>,
    version: &'a str,
}

/// Writes `stamp.json`; it holds no timestamps so identical runs write identical stamps.
pub fn write_stamp(out: &Path, command: &str, manifest_sha256: &str, seed: Option<u64>) -> anyhow::Result<()> {
    let stamp = Stamp {
        command,
        manifest_sha256,
        seed,
        version: env!("CARGO_PKG_VERSION"),
    };
    write_json(&out.join("stamp.json"), &stamp)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn create_out(out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))
}

/// Reads every record from the listed shards, in order.
pub fn read_records(paths: &[PathBuf]) -> anyhow::Result<Vec<SampleRecord>> {
    let mut out = Vec::new();
    for p in paths {
        let records = read_shard(p).map_err(|e| Invalid(format!("shard {}: {e}", p.display())))?;
        out.extend(records);
    }
    Ok(out)
}

/// Writes `records` as `{prefix}-NNNNN.shard` files of at most `shard_size`
/// records plus an `index.json`. An empty input still writes one empty shard.
pub fn write_shards(records: &[SampleRecord], out: &Path, prefix: &str, shard_size: usize) -> anyhow::Result<ShardIndex> {
    let mut index = ShardIndex::default();
    let size = shard_size.max(1);
    let chunks: Vec<&[SampleRecord]> = if records.is_empty() { vec![&[]] } else { records.chunks(size).collect() };
    for (k, chunk) in chunks.into_iter().enumerate() {
        let name = format!("{prefix}-{k:05}.shard");
        write_shard(chunk, out.join(&name)).with_context(|| format!("writing shard {name}"))?;
        index.shards.push(ShardIndexEntry {
            path: PathBuf::from(name),
            records: chunk.len() as u64,
        });
    }
    write_shard_index(&index, out.join("index.json"))?;
    Ok(index)
}

/// Maps `f` over `0..n` on up to `workers` threads, results in index order.
pub fn par_indexed<R: Send>(n: usize, workers: usize, f: impl Fn(usize) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(&f).collect();
    }
    let chunk = n.div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..n)
            .step_by(chunk)
            .map(|lo| {
                let f = &f;
                s.spawn(move || (lo..(lo + chunk).min(n)).map(f).collect::<Vec<R>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
