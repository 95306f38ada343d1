//! Pipeline stages. Each reads its inputs from the artifact directory and
//! writes its outputs there, plus a run manifest under `runs/`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use conceptlab_core::activation::{compute_all_aams, gap};
use conceptlab_core::concepts::{discover, FeatureMode};
use conceptlab_core::corpus::{generate_synthetic, make_query_pairs, Dataset, Split};
use conceptlab_core::embedding::{retrieval_sanity, similarity_separation, train_embedding};
use conceptlab_core::retrieval::evaluate_topk;
use conceptlab_core::subspace::{accuracy, embed_images, train_subspace};
use conceptlab_core::word2vec::{build_vocab, train_skipgram};
use conceptlab_core::AttrId;
use serde::Serialize;

use crate::artifacts::{self, IndexEntry, Semantic};
use crate::bundle::{ModelBundle, Scope, DATASET_DIR};
use crate::config::PipelineConfig;
use crate::dataset_io::{load_dataset, save_dataset};
use crate::error::{Error, Result};
use crate::format::{fmt_f, read_file, vocab_hash, write_file, Hash, Stamp};
use crate::report::Table;

pub const REPORTS_DIR: &str = "reports";
pub const RUNS_DIR: &str = "runs";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage {
    /// Synthesize the corpus, or copy in an external dataset directory.
    Generate { ingest: Option<PathBuf> },
    TrainWord2vec,
    TrainEmbedding,
    ComputeAams,
    Cluster,
    TrainSubspaces,
    Evaluate,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Generate { .. } => "generate",
            Stage::TrainWord2vec => "train-word2vec",
            Stage::TrainEmbedding => "train-embedding",
            Stage::ComputeAams => "compute-aams",
            Stage::Cluster => "cluster",
            Stage::TrainSubspaces => "train-subspaces",
            Stage::Evaluate => "evaluate",
        }
    }

    pub fn all() -> [Stage; 7] {
        [
            Stage::Generate { ingest: None },
            Stage::TrainWord2vec,
            Stage::TrainEmbedding,
            Stage::ComputeAams,
            Stage::Cluster,
            Stage::TrainSubspaces,
            Stage::Evaluate,
        ]
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    stage: &'a str,
    config_hash: String,
    git_describe: String,
    wall_time_ms: u64,
    outputs: Vec<OutputEntry>,
}

#[derive(Serialize)]
struct OutputEntry {
    path: String,
    sha256: String,
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub dir: PathBuf,
    config_hash: Hash,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, dir: impl Into<PathBuf>) -> Self {
        let config_hash = cfg.hash();
        Self { cfg, dir: dir.into(), config_hash }
    }

    pub fn from_config(cfg: PipelineConfig) -> Self {
        let dir = cfg.artifact_dir.clone();
        Self::new(cfg, dir)
    }

    pub fn config_hash(&self) -> Hash {
        self.config_hash
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn dataset_dir(&self) -> PathBuf {
        self.dir.join(DATASET_DIR)
    }

    fn stamp(&self, ds: &Dataset) -> Stamp {
        Stamp { vocab: vocab_hash(ds.vocab.labels()), config: self.config_hash }
    }

    /// Runs one stage and records its run manifest.
    pub fn run(&self, stage: &Stage) -> Result<()> {
        let start = Instant::now();
        log::info!("{}: start", stage.name());
        let outputs = match stage {
            Stage::Generate { ingest } => self.generate(ingest.as_deref())?,
            Stage::TrainWord2vec => self.train_word2vec()?,
            Stage::TrainEmbedding => self.train_embedding()?,
            Stage::ComputeAams => self.compute_aams()?,
            Stage::Cluster => self.cluster()?,
            Stage::TrainSubspaces => self.train_subspaces()?,
            Stage::Evaluate => self.evaluate()?,
        };
        let wall = start.elapsed();
        log::info!("{}: done in {:.2}s", stage.name(), wall.as_secs_f64());
        self.write_run_manifest(stage.name(), wall.as_millis() as u64, &outputs)
    }

    pub fn run_all(&self) -> Result<()> {
        let start = Instant::now();
        for stage in Stage::all() {
            self.run(&stage)?;
        }
        self.write_run_manifest("run-all", start.elapsed().as_millis() as u64, &[])
    }

    fn write_run_manifest(&self, stage: &str, wall_time_ms: u64, outputs: &[PathBuf]) -> Result<()> {
        let mut entries = Vec::new();
        for p in outputs {
            let rel = p.strip_prefix(&self.dir).unwrap_or(p);
            entries.push(OutputEntry { path: rel.display().to_string(), sha256: Hash::of(&read_file(p)?).to_string() });
        }
        let m = RunManifest {
            stage,
            config_hash: self.config_hash.to_string(),
            git_describe: git_describe(),
            wall_time_ms,
            outputs: entries,
        };
        let path = self.dir.join(RUNS_DIR).join(format!("{stage}.toml"));
        let text = toml::to_string(&m).map_err(|e| Error::format(&path, e.to_string()))?;
        write_file(&path, text.as_bytes())
    }

    fn load_dataset(&self) -> Result<(Dataset, Stamp)> {
        let (ds, config) = load_dataset(&self.dataset_dir())?;
        let stamp = self.stamp(&ds);
        if let Some(h) = config.filter(|h| *h != self.config_hash) {
            log::warn!("dataset was written under config {h}, current config is {}", self.config_hash);
        }
        Ok((ds, stamp))
    }

    /// Loads an upstream artifact's stamp check: the vocabulary must match,
    /// a differing config only warns.
    fn check_upstream(&self, path: &Path, found: &Stamp, want: &Stamp) -> Result<()> {
        if found.vocab != want.vocab {
            return Err(Error::HashMismatch {
                artifact: path.to_path_buf(),
                what: "vocab",
                expected: want.vocab.to_string(),
                found: found.vocab.to_string(),
            });
        }
        if found.config != self.config_hash {
            log::warn!("{} was written under config {}, current config is {}", path.display(), found.config, self.config_hash);
        }
        Ok(())
    }

    fn generate(&self, ingest: Option<&Path>) -> Result<Vec<PathBuf>> {
        let out = self.dataset_dir();
        let ds = match ingest {
            Some(src) => {
                if src.canonicalize().ok() == out.canonicalize().ok() {
                    return Err(Error::Config("cannot ingest a dataset onto itself".into()));
                }
                load_dataset(src)?.0
            }
            None => generate_synthetic(&self.cfg.concept_specs(), &self.cfg.synthetic())?,
        };
        save_dataset(&ds, &out, Some(self.config_hash))?;
        log::info!("dataset: {} items, {} attributes", ds.items.len(), ds.vocab.len());
        Ok(crate::dataset_io::dataset_files(&out).to_vec())
    }

    fn train_word2vec(&self) -> Result<Vec<PathBuf>> {
        let (ds, stamp) = self.load_dataset()?;
        let labels: Vec<Vec<&str>> = ds.split(Split::Train).iter().map(|&id| ds.description_labels(id)).collect::<Result<_, _>>()?;
        let vocab = build_vocab(&labels, self.cfg.word2vec.min_count)?;
        let sg = self.cfg.skipgram();
        let w2v = train_skipgram(&labels, &vocab, &sg)?;
        let vectors: Semantic = (0..ds.vocab.len() as AttrId)
            .filter_map(|a| w2v.get(ds.vocab.label(a)?).map(|v| (a, v.to_vec())))
            .collect();
        log::info!("word2vec: {} of {} attributes above the frequency floor", vectors.len(), ds.vocab.len());
        let path = self.path(artifacts::WORD2VEC);
        artifacts::save_word2vec(&path, &stamp, ds.vocab.len(), sg.dim, &vectors)?;
        Ok(vec![path])
    }

    fn train_embedding(&self) -> Result<Vec<PathBuf>> {
        let (ds, stamp) = self.load_dataset()?;
        let features: Vec<Vec<f64>> = ds.items.iter().map(|i| gap(&i.feature_map)).collect();
        let descs: Vec<Vec<AttrId>> = ds.items.iter().map(|i| i.description.clone()).collect();
        let (model, log) = train_embedding(&features, &descs, ds.split(Split::Train), ds.vocab.len(), &self.cfg.train())?;
        if let (Some(first), Some(last)) = (log.epoch_loss.first(), log.epoch_loss.last()) {
            log::info!("embedding: loss {first:.4} -> {last:.4}");
        }
        let path = self.path(artifacts::EMBEDDING);
        artifacts::save_embedding(&path, &stamp, &model)?;
        Ok(vec![path])
    }

    fn compute_aams(&self) -> Result<Vec<PathBuf>> {
        let epath = self.path(artifacts::EMBEDDING);
        crate::format::require(std::slice::from_ref(&epath))?;
        let (ds, stamp) = self.load_dataset()?;
        let (model, s) = artifacts::load_embedding(&epath)?;
        self.check_upstream(&epath, &s, &stamp)?;
        let set = compute_all_aams(&ds, &model)?;
        if !set.skipped.is_empty() {
            log::warn!("aams: {} attributes have no positive training item", set.skipped.len());
        }
        let path = self.path(artifacts::AAMS);
        artifacts::save_aams(&path, &stamp, ds.dims.height, ds.dims.width, ds.vocab.len(), &set)?;
        Ok(vec![path])
    }

    fn cluster(&self) -> Result<Vec<PathBuf>> {
        let (apath, wpath) = (self.path(artifacts::AAMS), self.path(artifacts::WORD2VEC));
        crate::format::require(&[apath.clone(), wpath.clone()])?;
        let (ds, stamp) = self.load_dataset()?;
        let (aams, s) = artifacts::load_aams(&apath)?;
        self.check_upstream(&apath, &s, &stamp)?;
        let (semantic, _, s) = artifacts::load_word2vec(&wpath)?;
        self.check_upstream(&wpath, &s, &stamp)?;
        let d = discover(&aams, &semantic, ds.ground_truth.as_deref(), &self.cfg.discovery(FeatureMode::Joint))?;
        if let Some(sc) = &d.scores {
            log::info!("cluster: V-measure {:.4}", sc.v_measure);
        }
        let (cpath, spath) = (self.path(artifacts::CONCEPTS), self.path(artifacts::SCORES));
        artifacts::save_concepts(&cpath, &stamp, &ds.vocab, &d.assignment)?;
        artifacts::save_scores(&spath, &stamp, d.scores.as_ref())?;
        Ok(vec![cpath, spath])
    }

    fn train_subspaces(&self) -> Result<Vec<PathBuf>> {
        let (epath, cpath) = (self.path(artifacts::EMBEDDING), self.path(artifacts::CONCEPTS));
        crate::format::require(&[epath.clone(), cpath.clone()])?;
        let (ds, stamp) = self.load_dataset()?;
        let (model, s) = artifacts::load_embedding(&epath)?;
        self.check_upstream(&epath, &s, &stamp)?;
        let (assignment, s) = artifacts::load_concepts(&cpath, &ds.vocab)?;
        self.check_upstream(&cpath, &s, &stamp)?;
        let features: Vec<Vec<f64>> = ds.items.iter().map(|i| gap(&i.feature_map)).collect();
        let descs: Vec<Vec<AttrId>> = ds.items.iter().map(|i| i.description.clone()).collect();
        let emb = embed_images(&model, &features)?;
        let mut entries = Vec::new();
        let mut outputs = Vec::new();
        for c in assignment.concepts() {
            let members = assignment.members(c);
            if members.len() < 2 {
                log::warn!("subspaces: concept {c} has {} attribute(s), no subspace trained", members.len());
                continue;
            }
            let (sub, rep) = match train_subspace(c, &members, &emb, &descs, ds.split(Split::Train), &self.cfg.subspace(c)) {
                Err(conceptlab_core::Error::NoPositives(_)) => {
                    log::warn!("subspaces: concept {c} has no positive training item");
                    continue;
                }
                r => r?,
            };
            let file = artifacts::subspace_file(c);
            let path = self.path(&file);
            artifacts::save_subspace(&path, &stamp, &sub)?;
            entries.push(IndexEntry { concept: c, file, positives: rep.positives, negatives: rep.negatives });
            outputs.push(path);
        }
        let ipath = self.path(artifacts::SUBSPACES);
        artifacts::save_subspace_index(&ipath, &stamp, &entries)?;
        outputs.push(ipath);
        Ok(outputs)
    }

    /// Loads the whole bundle, which refuses inputs written under mixed
    /// configs, and writes the reports.
    fn evaluate(&self) -> Result<Vec<PathBuf>> {
        let b = ModelBundle::load(&self.dir)?;
        let reports = self.dir.join(REPORTS_DIR);
        let mut outputs = Vec::new();
        let mut put = |name: &str, t: Table| -> Result<()> {
            let p = reports.join(name);
            write_file(&p, t.render(&b.stamp).as_bytes())?;
            outputs.push(p);
            Ok(())
        };

        put("clustering.tsv", self.clustering_report(&b)?)?;
        let (topk, detection) = self.retrieval_reports(&b)?;
        put("topk.tsv", topk)?;
        put("detection.tsv", detection)?;
        put("aam_recovery.tsv", self.aam_report(&b))?;
        put("subspaces.tsv", subspace_report(&b))?;
        put("embedding.tsv", embedding_report(&b)?)?;
        Ok(outputs)
    }

    fn clustering_report(&self, b: &ModelBundle) -> Result<Table> {
        let mut t = Table::new(&["mode", "homogeneity", "completeness", "v_measure"]);
        let Some(gt) = b.dataset.ground_truth.as_deref() else {
            t.note("no ground truth");
            return Ok(t);
        };
        for mode in FeatureMode::ALL {
            let d = discover(&b.aams, &b.semantic, Some(gt), &self.cfg.discovery(mode))?;
            if let Some(s) = d.scores {
                t.row(vec![mode.name().into(), fmt_f(s.homogeneity), fmt_f(s.completeness), fmt_f(s.v_measure)]);
            }
        }
        Ok(t)
    }

    fn retrieval_reports(&self, b: &ModelBundle) -> Result<(Table, Table)> {
        let test = b.dataset.split(Split::Test);
        let pairs = make_query_pairs(&b.dataset, test);
        let mut topk = Table::new(&["method", "k", "accuracy", "n_queries"]);
        let mut det = Table::new(&["key", "value"]);
        let Some(gallery) = b.gallery(Scope::Split(Split::Test)) else {
            topk.note("empty test split");
            return Ok((topk, det));
        };
        if pairs.is_empty() {
            topk.note("no query pairs in the test split");
            return Ok((topk, det));
        }
        let r = evaluate_topk(&pairs, &b.embeddings, &b.descriptions, &b.embedding, &b.index, gallery, &self.cfg.evaluate.ks)?;
        for row in &r.rows {
            topk.row(vec![row.method.name().into(), row.k.to_string(), fmt_f(row.accuracy), row.n_queries.to_string()]);
        }
        det.row(vec!["queries".into(), pairs.len().to_string()]);
        det.row(vec!["gallery_size".into(), r.gallery_size.to_string()]);
        det.row(vec!["eligible".into(), r.detection_eligible.to_string()]);
        det.row(vec!["correct".into(), r.detection_correct.to_string()]);
        det.row(vec!["rate".into(), fmt_f(r.detection_rate())]);
        det.row(vec!["fallbacks".into(), r.fallbacks.to_string()]);
        Ok((topk, det))
    }

    /// Share of positive AAM mass inside each planted concept's mask, for
    /// concepts of the configured corpus that the dataset also names.
    fn aam_report(&self, b: &ModelBundle) -> Table {
        let mut t = Table::new(&["concept", "mask_cells", "mean_inside", "min_inside"]);
        let ds = &b.dataset;
        for spec in self.cfg.concept_specs() {
            let cells = spec.spatial_mask.iter().filter(|&&m| m).count();
            if !ds.concept_names.contains(&spec.name) || spec.spatial_mask.len() != ds.dims.cells() || cells == spec.spatial_mask.len() {
                continue;
            }
            let masses: Vec<f64> = spec
                .attributes
                .iter()
                .filter_map(|l| ds.vocab.id(l))
                .filter_map(|a| b.aams.maps.get(&a))
                .map(|m| m.positive_mass_inside(&spec.spatial_mask))
                .collect();
            if masses.is_empty() {
                continue;
            }
            let mean = masses.iter().sum::<f64>() / masses.len() as f64;
            let min = masses.iter().copied().fold(f64::INFINITY, f64::min);
            t.row(vec![spec.name.clone(), cells.to_string(), fmt_f(mean), fmt_f(min)]);
        }
        t
    }
}

fn subspace_report(b: &ModelBundle) -> Table {
    let mut t = Table::new(&["concept", "attributes", "test_accuracy"]);
    for s in &b.index.subspaces {
        let labels: Vec<&str> = s.attributes.iter().filter_map(|&a| b.dataset.vocab.label(a)).collect();
        let acc = accuracy(s, &b.embeddings, &b.descriptions, b.dataset.split(Split::Test));
        t.row(vec![s.concept.to_string(), labels.join(","), fmt_f(acc)]);
    }
    t
}

fn embedding_report(b: &ModelBundle) -> Result<Table> {
    let mut t = Table::new(&["key", "value"]);
    let val = b.dataset.split(Split::Val);
    if val.is_empty() {
        t.note("empty validation split");
        return Ok(t);
    }
    let (pos, neg) = similarity_separation(&b.embedding, &b.features, &b.descriptions, val)?;
    let ranks = retrieval_sanity(&b.embedding, &b.features, &b.descriptions, val)?;
    t.row(vec!["val_matching_cosine".into(), fmt_f(pos)]);
    t.row(vec!["val_other_cosine".into(), fmt_f(neg)]);
    t.row(vec!["val_median_rank_text_to_image".into(), fmt_f(ranks.text_to_image)]);
    t.row(vec!["val_median_rank_image_to_text".into(), fmt_f(ranks.image_to_text)]);
    Ok(t)
}
