//! Resolved run configuration: defaults, then the JSON config file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toponav::eval::{ReportFormat, DEFAULT_POSITIVE_RADIUS};
use toponav::localization::{LocalizerConfig, Selector};
use toponav::sim::{PolicyConfig, WorldConfig};
use toponav::subgoal::DEFAULT_PAIRWISE_THRESHOLD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub format: ReportFormat,
    pub localizer: LocalizerConfig,
    pub pairwise_threshold: f64,
    pub map: MapSettings,
    pub sim: SimSettings,
    pub recall: RecallSettings,
    pub bench: BenchSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            format: ReportFormat::Csv,
            localizer: LocalizerConfig::default(),
            pairwise_threshold: DEFAULT_PAIRWISE_THRESHOLD,
            map: MapSettings::default(),
            sim: SimSettings::default(),
            recall: RecallSettings::default(),
            bench: BenchSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSettings {
    pub input: Option<PathBuf>,
    pub stride: usize,
}

impl Default for MapSettings {
    fn default() -> Self {
        Self {
            input: None,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub episodes: usize,
    /// Extra selectors for a paired run; empty means `localizer.selector` only.
    pub selectors: Vec<Selector>,
    pub kidnapped: bool,
    pub bursty: bool,
    /// Map directory to navigate instead of generated worlds.
    pub map: Option<PathBuf>,
    pub world: WorldConfig,
    /// Defaults to the scenario preset: noise-free, or moderate noise for
    /// kidnapped and bursty runs.
    pub policy: Option<PolicyConfig>,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            episodes: 100,
            selectors: Vec::new(),
            kidnapped: false,
            bursty: false,
            map: None,
            world: WorldConfig::default(),
            policy: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallMethodKind {
    EmbeddingNn,
    PairwiseStub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecallSettings {
    pub queries: Option<PathBuf>,
    pub database: Option<PathBuf>,
    pub n: Vec<usize>,
    /// Meters.
    pub radius: f64,
    pub method: RecallMethodKind,
    /// Synthetic cost per pair when ranking with the pairwise stub.
    pub pair_flops: u64,
}

impl Default for RecallSettings {
    fn default() -> Self {
        Self {
            queries: None,
            database: None,
            n: vec![1, 5, 10],
            radius: DEFAULT_POSITIVE_RADIUS,
            method: RecallMethodKind::EmbeddingNn,
            pair_flops: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSettings {
    pub counts: Vec<usize>,
    pub dim: usize,
    pub flops: u64,
    pub reps: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            counts: vec![5, 21, 101],
            dim: 512,
            flops: 2_000_000,
            reps: 5,
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with the JSON document at `path`, if any.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Selectors a `sim run` compares, in order.
    pub fn selectors(&self) -> Vec<Selector> {
        if self.sim.selectors.is_empty() {
            vec![self.localizer.selector]
        } else {
            self.sim.selectors.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.localizer.validate()?;
        for s in self.selectors() {
            LocalizerConfig {
                selector: s,
                ..self.localizer.clone()
            }
            .validate()?;
        }
        ensure!(
            self.pairwise_threshold.is_finite(),
            "pairwise threshold must be finite"
        );
        ensure!(self.map.stride > 0, "stride must be positive");
        ensure!(self.sim.episodes > 0, "episodes must be positive");
        if self.sim.map.is_none() {
            self.sim.world.validate()?;
        } else if self.sim.bursty {
            bail!("--bursty applies to generated worlds, not to a loaded map");
        }
        if let Some(p) = &self.sim.policy {
            p.validate()?;
        }
        ensure!(!self.recall.n.is_empty(), "recall needs at least one n");
        ensure!(self.recall.n.iter().all(|&n| n > 0), "recall n must be positive");
        ensure!(
            self.recall.radius.is_finite() && self.recall.radius > 0.0,
            "radius must be positive"
        );
        let c = &self.bench.counts;
        ensure!(c.len() >= 3, "bench needs at least 3 candidate counts");
        ensure!(
            c[0] > 0 && c.windows(2).all(|w| w[0] < w[1]),
            "candidate counts must be positive and strictly ascending"
        );
        ensure!(self.bench.dim > 0, "embedding dim must be positive");
        ensure!(self.bench.reps >= 5, "bench needs at least 5 repetitions");
        Ok(())
    }

    /// SHA-256 over the resolved settings, excluding where and how output is
    /// written.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("out");
            obj.remove("format");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
