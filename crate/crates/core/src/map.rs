//! Linear-chain topological map built from a reference traversal.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingStore, EmbeddingVector};
use crate::error::{Error, Result};
use crate::format::{self, EmbeddingFile, RowMeta};

pub const MANIFEST_FILE: &str = "map.json";
pub const MANIFEST_VERSION: u32 = 1;
const EMBEDDING_FILE: &str = "embeddings.bin";

#[derive(Debug, Clone, PartialEq)]
pub struct MapNode {
    pub index: usize,
    pub embedding: EmbeddingVector,
    pub position: Option<[f64; 2]>,
    pub image_ref: Option<String>,
}

/// One frame of the reference run.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteSample {
    pub embedding: EmbeddingVector,
    pub position: Option<[f64; 2]>,
    pub image_ref: Option<String>,
}

impl RouteSample {
    pub fn new(embedding: EmbeddingVector) -> Self {
        Self {
            embedding,
            position: None,
            image_ref: None,
        }
    }
}

/// Ordered route nodes `0..=S`; node `S` is the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologicalMap {
    nodes: Vec<MapNode>,
    store: EmbeddingStore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapManifest {
    pub version: u32,
    pub embedding_file: String,
    pub meta_file: String,
    pub node_count: usize,
    pub dim: usize,
}

/// Source positions kept by striding: every `stride`-th element plus the last.
pub fn stride_indices(len: usize, stride: usize) -> Vec<usize> {
    if len == 0 || stride == 0 {
        return Vec::new();
    }
    let mut kept: Vec<usize> = (0..len).step_by(stride).collect();
    if kept.last() != Some(&(len - 1)) {
        kept.push(len - 1);
    }
    kept
}

/// Rows of an embedding file as reference-run frames, metadata attached.
pub fn route_samples(file: EmbeddingFile) -> Vec<RouteSample> {
    file.store
        .vectors()
        .iter()
        .zip(file.meta)
        .map(|(e, m)| RouteSample {
            embedding: e.clone(),
            position: m.position,
            image_ref: m.image,
        })
        .collect()
}

/// Subsample a reference run into a map.
pub fn build_map(sequence: Vec<RouteSample>, stride: usize) -> Result<TopologicalMap> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be positive".into()));
    }
    let kept = stride_indices(sequence.len(), stride);
    if kept.len() < 2 {
        return Err(Error::TooFewNodes(kept.len()));
    }
    let mut source: Vec<Option<RouteSample>> = sequence.into_iter().map(Some).collect();
    let samples = kept
        .into_iter()
        .map(|i| source[i].take().expect("stride indices are unique"))
        .collect();
    TopologicalMap::from_samples(samples)
}

impl TopologicalMap {
    /// Every sample becomes a node, in order.
    pub fn from_samples(samples: Vec<RouteSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewNodes(samples.len()));
        }
        let mut store = EmbeddingStore::with_dim(samples[0].embedding.dim())?;
        let mut nodes = Vec::with_capacity(samples.len());
        for (index, s) in samples.into_iter().enumerate() {
            store.push(s.embedding.clone())?;
            nodes.push(MapNode {
                index,
                embedding: s.embedding,
                position: s.position,
                image_ref: s.image_ref,
            });
        }
        Ok(Self { nodes, store })
    }

    pub fn from_embeddings(embeddings: Vec<EmbeddingVector>) -> Result<Self> {
        Self::from_samples(embeddings.into_iter().map(RouteSample::new).collect())
    }

    pub fn from_file(file: EmbeddingFile) -> Result<Self> {
        Self::from_samples(route_samples(file))
    }

    pub fn nodes(&self) -> &[MapNode] {
        &self.nodes
    }

    pub fn store(&self) -> &EmbeddingStore {
        &self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false: a map holds at least two nodes.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the goal node, `S`.
    pub fn last_index(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.store.dim()
    }

    pub fn node(&self, index: usize) -> Result<&MapNode> {
        self.nodes.get(index).ok_or(Error::NodeOutOfRange {
            index,
            last: self.last_index(),
        })
    }

    fn to_file(&self) -> EmbeddingFile {
        let meta = self
            .nodes
            .iter()
            .map(|n| RowMeta {
                position: n.position,
                image: n.image_ref.clone(),
                timestamp: None,
            })
            .collect();
        EmbeddingFile {
            store: self.store.clone(),
            meta,
        }
    }
}

/// Writes `map.json`, the embedding binary and its sidecar into `dir`.
pub fn save_map(map: &TopologicalMap, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bin = dir.join(EMBEDDING_FILE);
    let meta = format::sidecar_path(&bin);
    map.to_file().save(&bin)?;
    let manifest = MapManifest {
        version: MANIFEST_VERSION,
        embedding_file: EMBEDDING_FILE.to_string(),
        meta_file: meta
            .file_name()
            .expect("sidecar has a file name")
            .to_string_lossy()
            .into_owned(),
        node_count: map.len(),
        dim: map.dim(),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_map(dir: &Path) -> Result<TopologicalMap> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: MapManifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::UnsupportedVersion {
            found: manifest.version,
            expected: MANIFEST_VERSION,
        });
    }
    let store = format::read_embeddings(&dir.join(&manifest.embedding_file))?;
    let meta = format::read_meta(&dir.join(&manifest.meta_file))?;
    let file = EmbeddingFile::new(store, meta)?;
    if file.store.len() != manifest.node_count || file.store.dim() != manifest.dim {
        return Err(Error::ManifestMismatch(format!(
            "manifest declares {} nodes of dim {}, files hold {} of dim {}",
            manifest.node_count,
            manifest.dim,
            file.store.len(),
            file.store.dim()
        )));
    }
    TopologicalMap::from_file(file)
}
