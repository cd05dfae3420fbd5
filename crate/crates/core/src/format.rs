//! On-disk embedding format.
//!
//! Binary, little-endian: `PNAV` magic, `u32` version (1), `u32` dim,
//! `u64` count, then `count * dim` `f32` values row-major. Per-row metadata
//! sits next to it in `<basename>.meta.json` as a JSON array aligned 1:1 with
//! the binary rows.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingStore, EmbeddingVector};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"PNAV";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

/// Per-row sidecar metadata.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RowMeta {
    /// Planar position in meters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    /// Seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<f64>,
}

/// `route.bin` -> `route.meta.json`.
pub fn sidecar_path(embedding_path: &Path) -> PathBuf {
    embedding_path.with_extension("meta.json")
}

pub fn encode_embeddings(store: &EmbeddingStore) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + store.len() * store.dim() * 4);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(store.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(store.len() as u64).to_le_bytes());
    for v in store {
        for x in v.iter() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    buf
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingStore> {
    if bytes.len() < 4 {
        let mut found = [0u8; 4];
        found[..bytes.len()].copy_from_slice(bytes);
        return Err(Error::BadMagic { found });
    }
    let found: [u8; 4] = bytes[0..4].try_into().unwrap();
    if found != MAGIC {
        return Err(Error::BadMagic { found });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::CountMismatch {
            dim: 0,
            count: 0,
            actual_bytes: 0,
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let payload = &bytes[HEADER_LEN..];
    let expected = (dim as u64)
        .checked_mul(count)
        .and_then(|n| n.checked_mul(4));
    if dim == 0 || expected != Some(payload.len() as u64) {
        return Err(Error::CountMismatch {
            dim,
            count,
            actual_bytes: payload.len() as u64,
        });
    }

    let dim = dim as usize;
    let mut store = EmbeddingStore::with_dim(dim)?;
    for row in payload.chunks_exact(dim * 4) {
        let values = row
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        store.push(EmbeddingVector::new(values)?)?;
    }
    Ok(store)
}

pub fn write_embeddings(path: &Path, store: &EmbeddingStore) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_embeddings(store))
        .map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingStore> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embeddings(&bytes)
}

pub fn write_meta(path: &Path, rows: &[RowMeta]) -> Result<()> {
    let text = serde_json::to_string_pretty(rows).map_err(|e| Error::json(path, e))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_meta(path: &Path) -> Result<Vec<RowMeta>> {
    if !path.exists() {
        return Err(Error::MetaNotFound(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Embeddings plus their aligned sidecar rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub store: EmbeddingStore,
    pub meta: Vec<RowMeta>,
}

impl EmbeddingFile {
    pub fn new(store: EmbeddingStore, meta: Vec<RowMeta>) -> Result<Self> {
        if store.len() != meta.len() {
            return Err(Error::SidecarMismatch {
                rows: store.len(),
                meta_rows: meta.len(),
            });
        }
        Ok(Self { store, meta })
    }

    /// Reads `path` and its `.meta.json` sidecar; the sidecar is required.
    pub fn load(path: &Path) -> Result<Self> {
        let meta = read_meta(&sidecar_path(path))?;
        let store = read_embeddings(path)?;
        Self::new(store, meta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_embeddings(path, &self.store)?;
        write_meta(&sidecar_path(path), &self.meta)
    }

    pub fn positions(&self) -> Result<Vec<[f64; 2]>> {
        self.meta
            .iter()
            .enumerate()
            .map(|(i, m)| m.position.ok_or(Error::MissingPosition(i)))
            .collect()
    }
}
