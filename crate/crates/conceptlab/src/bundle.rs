//! A complete, read-only set of pipeline artifacts loaded into memory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use conceptlab_core::activation::{gap, AamSet};
use conceptlab_core::corpus::{Dataset, Split};
use conceptlab_core::embedding::EmbeddingModel;
use conceptlab_core::projection::{grid_snap, pca_2d};
use conceptlab_core::retrieval::{baseline_query, concept_query, ConceptIndex, Gallery, Method, RankedResult};
use conceptlab_core::subspace::embed_images;
use conceptlab_core::{AttrId, ConceptId, ItemId};
use sha2::{Digest, Sha256};

use crate::artifacts::{self, Semantic};
use crate::dataset_io::{self, load_dataset};
use crate::error::{Error, Result};
use crate::format::{read_file, require, vocab_hash, Hash, Stamp};

pub const DATASET_DIR: &str = "dataset";

/// The nine files every bundle holds, relative to its directory.
pub fn expected_files() -> [String; 9] {
    [
        format!("{DATASET_DIR}/{}", dataset_io::MANIFEST),
        format!("{DATASET_DIR}/{}", dataset_io::FEATURES),
        format!("{DATASET_DIR}/{}", dataset_io::DESCRIPTIONS),
        artifacts::WORD2VEC.into(),
        artifacts::EMBEDDING.into(),
        artifacts::AAMS.into(),
        artifacts::CONCEPTS.into(),
        artifacts::SCORES.into(),
        artifacts::SUBSPACES.into(),
    ]
}

/// Which items a query searches or a projection shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    All,
    Split(Split),
}

impl Scope {
    pub fn parse(s: &str) -> Option<Self> {
        if s == "all" {
            Some(Scope::All)
        } else {
            Split::from_name(s).map(Scope::Split)
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::Split(s) => s.name(),
        }
    }

    const ALL: [Scope; 4] = [Scope::All, Scope::Split(Split::Train), Scope::Split(Split::Val), Scope::Split(Split::Test)];
}

/// Plane coordinates for one concept's items, ascending item id.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub concept: ConceptId,
    pub scope: Scope,
    pub points: Vec<(ItemId, [f64; 2])>,
    /// `(rows, cols)` and each point's cell, when snapping was requested.
    pub grid: Option<((usize, usize), Vec<Option<(usize, usize)>>)>,
}

pub struct ModelBundle {
    pub dir: PathBuf,
    pub dataset: Dataset,
    pub descriptions: Vec<Vec<AttrId>>,
    /// Pooled feature per item.
    pub features: Vec<Vec<f64>>,
    pub embedding: EmbeddingModel,
    pub semantic: Semantic,
    pub aams: AamSet,
    pub index: ConceptIndex,
    /// Unit image embedding per item.
    pub embeddings: Vec<Vec<f64>>,
    /// Hidden-layer features per concept subspace, per item.
    pub subspace_features: BTreeMap<ConceptId, Vec<Vec<f64>>>,
    pub stamp: Stamp,
    /// Digest over every file of the bundle.
    pub hash: Hash,
    galleries: BTreeMap<Scope, Gallery>,
    plane: BTreeMap<(ConceptId, Scope), OnceLock<Vec<[f64; 2]>>>,
}

fn check_vocab(path: &Path, found: &Stamp, expected: Hash) -> Result<()> {
    if found.vocab != expected {
        return Err(Error::HashMismatch {
            artifact: path.to_path_buf(),
            what: "vocab",
            expected: expected.to_string(),
            found: found.vocab.to_string(),
        });
    }
    Ok(())
}

/// Errors unless every artifact was written under the same config.
pub fn check_same_config(stamps: &[(PathBuf, Hash)]) -> Result<()> {
    let Some((first_path, first)) = stamps.first() else { return Ok(()) };
    for (path, h) in &stamps[1..] {
        if h != first {
            return Err(Error::HashMismatch {
                artifact: path.clone(),
                what: "config",
                expected: format!("{first} (from {})", first_path.display()),
                found: h.to_string(),
            });
        }
    }
    Ok(())
}

impl ModelBundle {
    pub fn load(dir: &Path) -> Result<Self> {
        let expected: Vec<PathBuf> = expected_files().iter().map(|f| dir.join(f)).collect();
        require(&expected)?;

        let (dataset, ds_config) = load_dataset(&dir.join(DATASET_DIR))?;
        let vhash = vocab_hash(dataset.vocab.labels());
        let mut configs: Vec<(PathBuf, Hash)> = Vec::new();
        if let Some(h) = ds_config {
            configs.push((dir.join(DATASET_DIR).join(dataset_io::MANIFEST), h));
        }
        let mut stamped = |path: PathBuf, stamp: Stamp| -> Result<()> {
            check_vocab(&path, &stamp, vhash)?;
            configs.push((path, stamp.config));
            Ok(())
        };

        let p = dir.join(artifacts::WORD2VEC);
        let (semantic, _, s) = artifacts::load_word2vec(&p)?;
        stamped(p, s)?;
        let p = dir.join(artifacts::EMBEDDING);
        let (embedding, s) = artifacts::load_embedding(&p)?;
        stamped(p, s)?;
        let p = dir.join(artifacts::AAMS);
        let (aams, s) = artifacts::load_aams(&p)?;
        stamped(p, s)?;
        let p = dir.join(artifacts::CONCEPTS);
        let (assignment, s) = artifacts::load_concepts(&p, &dataset.vocab)?;
        stamped(p, s)?;
        let p = dir.join(artifacts::SCORES);
        let (_, s) = artifacts::load_scores(&p)?;
        stamped(p, s)?;
        let p = dir.join(artifacts::SUBSPACES);
        let (entries, s) = artifacts::load_subspace_index(&p)?;
        stamped(p, s)?;
        let mut subspaces = Vec::new();
        let mut files: Vec<String> = expected_files().to_vec();
        for e in &entries {
            let p = dir.join(&e.file);
            let (model, s) = artifacts::load_subspace(&p)?;
            if model.concept != e.concept {
                return Err(Error::format(&p, format!("holds concept {}, index says {}", model.concept, e.concept)));
            }
            stamped(p, s)?;
            subspaces.push(model);
            files.push(e.file.clone());
        }
        check_same_config(&configs)?;

        let m = dataset.vocab.len();
        if embedding.vocab_size() != m || embedding.feature_dim() != dataset.dims.channels {
            return Err(Error::format(dir.join(artifacts::EMBEDDING), "shape does not match the dataset"));
        }
        if let Some(s) = subspaces.iter().find(|s| s.input_dim() != embedding.dim()) {
            return Err(Error::format(dir.join(artifacts::subspace_file(s.concept)), "input dim does not match the embedding"));
        }

        let mut digest = Sha256::new();
        for f in &files {
            digest.update(f.as_bytes());
            digest.update(Sha256::digest(read_file(&dir.join(f))?));
        }
        let hash = Hash(digest.finalize().into());

        let descriptions: Vec<Vec<AttrId>> = dataset.items.iter().map(|i| i.description.clone()).collect();
        let features: Vec<Vec<f64>> = dataset.items.iter().map(|i| gap(&i.feature_map)).collect();
        let embeddings = embed_images(&embedding, &features)?;
        let subspace_features = subspaces
            .iter()
            .map(|s| (s.concept, embeddings.iter().map(|x| s.subspace_feature(x)).collect()))
            .collect();
        let mut galleries = BTreeMap::new();
        for scope in Scope::ALL {
            let ids = scope_ids(&dataset, scope);
            if !ids.is_empty() {
                galleries.insert(scope, Gallery::new(&ids, &embeddings)?);
            }
        }
        let plane = subspaces
            .iter()
            .flat_map(|s| Scope::ALL.map(|sc| ((s.concept, sc), OnceLock::new())))
            .collect();
        let config = configs[0].1;
        Ok(Self {
            dir: dir.to_path_buf(),
            index: ConceptIndex::new(assignment, subspaces),
            dataset,
            descriptions,
            features,
            embedding,
            semantic,
            aams,
            embeddings,
            subspace_features,
            stamp: Stamp { vocab: vhash, config },
            hash,
            galleries,
            plane,
        })
    }

    pub fn gallery(&self, scope: Scope) -> Option<&Gallery> {
        self.galleries.get(&scope)
    }

    /// Baseline or concept-aware retrieval for one item, excluding it from
    /// its own results.
    pub fn query(&self, image: ItemId, add: AttrId, method: Method, scope: Scope) -> Result<RankedResult> {
        let q = self.embeddings.get(image as usize).ok_or(conceptlab_core::Error::UnknownItem(image))?;
        let gallery = self.gallery(scope).ok_or(conceptlab_core::Error::EmptyGallery)?;
        let r = match method {
            Method::Baseline => baseline_query(q, add, &self.embedding, gallery, Some(image)),
            Method::ConceptAware => concept_query(q, add, &self.embedding, &self.index, gallery, Some(image)),
        };
        Ok(r?)
    }

    /// PCA of a concept's subspace features over `scope`, optionally snapped
    /// to a grid in ascending item id order.
    pub fn project(&self, concept: ConceptId, scope: Scope, grid: Option<(usize, usize)>) -> Result<Projection> {
        let cell = self.plane.get(&(concept, scope)).ok_or(conceptlab_core::Error::UnknownConcept(concept))?;
        let ids = scope_ids(&self.dataset, scope);
        if ids.is_empty() {
            return Err(conceptlab_core::Error::EmptyGallery.into());
        }
        let xy = match cell.get() {
            Some(xy) => xy,
            None => {
                let feats = &self.subspace_features[&concept];
                let pts: Vec<Vec<f64>> = ids.iter().map(|&i| feats[i as usize].clone()).collect();
                let xy = pca_2d(&pts)?;
                cell.get_or_init(|| xy)
            }
        };
        let points: Vec<(ItemId, [f64; 2])> = ids.iter().copied().zip(xy.iter().copied()).collect();
        let grid = grid.map(|(r, c)| ((r, c), grid_snap(xy, r, c)));
        Ok(Projection { concept, scope, points, grid })
    }
}

fn scope_ids(ds: &Dataset, scope: Scope) -> Vec<ItemId> {
    match scope {
        Scope::All => (0..ds.items.len() as ItemId).collect(),
        Scope::Split(s) => ds.split(s).to_vec(),
    }
}
