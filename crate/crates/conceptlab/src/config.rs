//! Pipeline configuration: one TOML document covering the corpus, every
//! module's hyperparameters and the seeds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use conceptlab_core::concepts::DiscoveryConfig;
use conceptlab_core::corpus::{mask_from_rows, ConceptSpec, Dims, SyntheticConfig};
use conceptlab_core::embedding::TrainConfig;
use conceptlab_core::subspace::SubspaceConfig;
use conceptlab_core::word2vec::{SkipGramConfig, Window};
use conceptlab_core::ConceptId;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::format::Hash;

pub const DEFAULT_TOML: &str = include_str!("../config/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub artifact_dir: PathBuf,
    pub seeds: Seeds,
    pub corpus: CorpusConfig,
    pub word2vec: Word2VecConfig,
    pub embedding: EmbeddingConfig,
    pub concepts: ConceptsConfig,
    pub subspace: SubspaceSection,
    pub evaluate: EvaluateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word2vec: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concepts: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub n_items: usize,
    pub noise_sigma: f64,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub concepts: Vec<ConceptEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptEntry {
    pub name: String,
    pub attributes: Vec<String>,
    pub slot: u32,
    #[serde(default)]
    pub optional: bool,
    #[serde(default)]
    pub ordinal: bool,
    #[serde(default)]
    pub slot_overrides: BTreeMap<String, u32>,
    /// One string per grid row, `#` for active cells.
    pub mask: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSetting {
    Radius(usize),
    Named(WindowName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowName {
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Word2VecConfig {
    pub dim: usize,
    pub window: WindowSetting,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub min_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub margin: f64,
    pub lr: f64,
    pub lr_decay: f64,
    pub decay_every: usize,
    pub batch_size: usize,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptsConfig {
    pub k: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceSection {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub neg_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub ks: Vec<usize>,
}

/// `first 8 bytes of sha256(master_le ‖ module)` as a little-endian integer.
pub fn derive_seed(master: u64, module: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(module.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

impl PipelineConfig {
    pub fn default_config() -> Self {
        Self::parse(DEFAULT_TOML).expect("embedded default config parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn check(&self) -> Result<()> {
        let c = &self.corpus;
        for entry in &c.concepts {
            if entry.mask.len() != c.height || entry.mask.iter().any(|r| r.chars().count() != c.width) {
                return Err(Error::Config(format!("concept {:?}: mask must be {} rows of {} cells", entry.name, c.height, c.width)));
            }
            if let Some(bad) = entry.mask.iter().flat_map(|r| r.chars()).find(|&ch| ch != '#' && ch != '.') {
                return Err(Error::Config(format!("concept {:?}: mask cell {bad:?} is neither '#' nor '.'", entry.name)));
            }
            if entry.name.is_empty() || entry.name.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("concept name {:?} must be one word", entry.name)));
            }
        }
        if self.evaluate.ks.is_empty() || self.evaluate.ks.contains(&0) {
            return Err(Error::Config("evaluate.ks must list positive cutoffs".into()));
        }
        if self.concepts.k == 0 || self.concepts.restarts == 0 {
            return Err(Error::Config("concepts.k and concepts.restarts must be positive".into()));
        }
        Ok(())
    }

    /// Canonical serialization with `artifact_dir` blanked, so the same
    /// settings hash the same wherever their output goes.
    pub fn hash(&self) -> Hash {
        let mut canon = self.clone();
        canon.artifact_dir = PathBuf::new();
        let text = toml::to_string(&canon).expect("config serializes");
        Hash(Sha256::digest(text.as_bytes()).into())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn seed(&self, module: &str, explicit: Option<u64>) -> u64 {
        explicit.unwrap_or_else(|| derive_seed(self.seeds.master, module))
    }

    pub fn concept_specs(&self) -> Vec<ConceptSpec> {
        self.corpus
            .concepts
            .iter()
            .map(|c| {
                let rows: Vec<&str> = c.mask.iter().map(String::as_str).collect();
                ConceptSpec {
                    name: c.name.clone(),
                    attributes: c.attributes.clone(),
                    spatial_mask: mask_from_rows(&rows),
                    semantic_slot: c.slot,
                    optional: c.optional,
                    ordinal: c.ordinal,
                    slot_overrides: c.slot_overrides.iter().map(|(k, &v)| (k.clone(), v)).collect(),
                }
            })
            .collect()
    }

    pub fn synthetic(&self) -> SyntheticConfig {
        let c = &self.corpus;
        SyntheticConfig {
            dims: Dims::new(c.height, c.width, c.channels),
            n_items: c.n_items,
            noise_sigma: c.noise_sigma,
            seed: self.seed("corpus", self.seeds.corpus),
            train_fraction: c.train_fraction,
            val_fraction: c.val_fraction,
        }
    }

    pub fn skipgram(&self) -> SkipGramConfig {
        let w = &self.word2vec;
        SkipGramConfig {
            dim: w.dim,
            window: match w.window {
                WindowSetting::Radius(r) => Window::Radius(r),
                WindowSetting::Named(WindowName::Full) => Window::Full,
            },
            negatives: w.negatives,
            epochs: w.epochs,
            lr: w.lr,
            seed: self.seed("word2vec", self.seeds.word2vec),
        }
    }

    pub fn train(&self) -> TrainConfig {
        let e = &self.embedding;
        TrainConfig {
            dim: e.dim,
            lr: e.lr,
            lr_decay: e.lr_decay,
            decay_every: e.decay_every,
            batch_size: e.batch_size,
            margin: e.margin,
            epochs: e.epochs,
            seed: self.seed("embedding", self.seeds.embedding),
        }
    }

    pub fn discovery(&self, mode: conceptlab_core::concepts::FeatureMode) -> DiscoveryConfig {
        DiscoveryConfig {
            k: self.concepts.k,
            restarts: self.concepts.restarts,
            seed: self.seed("concepts", self.seeds.concepts),
            mode,
        }
    }

    /// Each concept's classifier gets its own seed: the explicit subspace
    /// seed plus the concept id, or one derived from `subspace/<id>`.
    pub fn subspace(&self, concept: ConceptId) -> SubspaceConfig {
        let s = &self.subspace;
        let seed = match self.seeds.subspace {
            Some(base) => base.wrapping_add(u64::from(concept)),
            None => derive_seed(self.seeds.master, &format!("subspace/{concept}")),
        };
        SubspaceConfig { hidden: s.hidden, lr: s.lr, epochs: s.epochs, neg_ratio: s.neg_ratio, seed }
    }
}
