use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("embedding must have at least one component")]
    ZeroDimension,

    #[error("embedding component {index} is not finite ({value})")]
    NonFinite { index: usize, value: f32 },

    #[error("store is empty")]
    EmptyStore,

    #[error("k = {k} out of range for store of {count} vectors")]
    KOutOfRange { k: usize, count: usize },

    #[error("map needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("node index {index} out of range (last node is {last})")]
    NodeOutOfRange { index: usize, last: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid motion model: w_l = {w_l} > w_u = {w_u}")]
    InvalidMotionModel { w_l: i64, w_u: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("posterior collapsed to zero mass")]
    FilterDivergence,

    #[error("empty candidate list")]
    EmptyCandidates,

    #[error("bad magic bytes {found:?}, expected \"PNAV\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported format version {found}, expected {expected}")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("embedding file holds {actual_bytes} payload bytes, header declares {count} x {dim} floats")]
    CountMismatch { dim: u32, count: u64, actual_bytes: u64 },

    #[error("meta file has {meta_rows} rows but embedding file has {rows}")]
    SidecarMismatch { rows: usize, meta_rows: usize },

    #[error("meta file not found: {}", .0.display())]
    MetaNotFound(PathBuf),

    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),

    #[error("row {0} has no position")]
    MissingPosition(usize),

    #[error("timer resolution too coarse: all medians are zero; raise per_pair_flops")]
    TimerResolution,

    #[error("nothing to emit: {0}")]
    EmptyReport(&'static str),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
