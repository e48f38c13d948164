use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use super::{hex, text_hash, ContextEmbedding, EmbedError};

const MAGIC: &[u8; 4] = b"FEMB";
const VERSION: u32 = 1;

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Content-addressed on-disk cache: one file per `(provider, text)` holding a
/// small header and the matrix as little-endian `f32`. Writes go to a
/// temporary file that is renamed into place, so readers never see a partial
/// record.
#[derive(Clone, Debug)]
pub struct EmbeddingCache {
    dir: PathBuf,
}

impl EmbeddingCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, provider: &str, text: &str) -> PathBuf {
        let mut h = Sha256::new();
        h.update(provider.as_bytes());
        h.update([0u8]);
        h.update(text.as_bytes());
        self.dir.join(format!("{}.femb", hex(&h.finalize())))
    }

    pub fn get(&self, provider: &str, text: &str) -> Result<Option<ContextEmbedding>, EmbedError> {
        let path = self.path(provider, text);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        decode(&bytes, provider, text).map(Some).map_err(|m| EmbedError::Cache(format!("{}: {m}", path.display())))
    }

    pub fn put(&self, provider: &str, text: &str, e: &ContextEmbedding) -> Result<(), EmbedError> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(provider, text);
        let mut buf = Vec::with_capacity(64 + e.data.len() * 4);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(e.tokens as u32).to_le_bytes());
        buf.extend_from_slice(&(e.dim as u32).to_le_bytes());
        buf.extend_from_slice(&text_hash_bytes(text));
        for v in &e.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            path.file_name().unwrap().to_string_lossy(),
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, &buf)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

fn text_hash_bytes(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

fn decode(b: &[u8], provider: &str, text: &str) -> Result<ContextEmbedding, String> {
    if b.len() < 48 || &b[..4] != MAGIC {
        return Err("not an embedding record".into());
    }
    let u = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
    if u(4) != VERSION {
        return Err(format!("unsupported version {}", u(4)));
    }
    let (tokens, dim) = (u(8) as usize, u(12) as usize);
    if b[16..48] != text_hash_bytes(text) {
        return Err("text hash mismatch".into());
    }
    let body = &b[48..];
    if body.len() != tokens * dim * 4 {
        return Err(format!("expected {} values, found {} bytes", tokens * dim, body.len()));
    }
    Ok(ContextEmbedding {
        tokens,
        dim,
        data: body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect(),
        provider: provider.to_string(),
        text_hash: text_hash(text),
    })
}
