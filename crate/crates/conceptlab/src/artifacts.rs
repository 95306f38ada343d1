//! Model artifacts written between pipeline stages.
//!
//! Binary layouts after the common header (all integers `u32`, all reals
//! `f32`, little-endian):
//!
//! * `word2vec.bin` (`CFW2`): vocab size, dim, row count, then per row the
//!   attribute id and its vector. Attributes below the frequency floor have
//!   no row.
//! * `embedding.bin` (`CFEM`): K', D, M, margin, `W_I` (D rows of K'), `W_T`
//!   (M rows of D).
//! * `aams.bin` (`CFAM`): H, W, vocab size, then per attribute id, support
//!   count and H·W cells; skipped attributes follow as id and support 0.
//! * `subspace_<c>.bin` (`CFSS`): concept id, n, n attribute ids, hidden
//!   width, input dim, hidden weights, hidden biases, output weights, output
//!   biases.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use conceptlab_core::activation::{AamSet, AttributeMap, MapKind};
use conceptlab_core::concepts::{ClusterScores, ConceptAssignment};
use conceptlab_core::corpus::Vocab;
use conceptlab_core::embedding::EmbeddingModel;
use conceptlab_core::math::Matrix;
use conceptlab_core::subspace::SubspaceModel;
use conceptlab_core::{AttrId, ConceptId};

use crate::error::{Error, Result};
use crate::format::{fmt_f, parse_text_header, read_file, read_text, text_header, write_file, BinReader, BinWriter, Stamp};

pub const WORD2VEC: &str = "word2vec.bin";
pub const EMBEDDING: &str = "embedding.bin";
pub const AAMS: &str = "aams.bin";
pub const CONCEPTS: &str = "concepts.tsv";
pub const SCORES: &str = "scores";
pub const SUBSPACES: &str = "subspaces.index";

pub fn subspace_file(concept: ConceptId) -> String {
    format!("subspace_{concept}.bin")
}

pub type Semantic = BTreeMap<AttrId, Vec<f64>>;

pub fn save_word2vec(path: &Path, stamp: &Stamp, vocab_size: usize, dim: usize, vectors: &Semantic) -> Result<()> {
    let mut w = BinWriter::new(b"CFW2", stamp);
    w.usize(vocab_size);
    w.usize(dim);
    w.usize(vectors.len());
    for (&a, v) in vectors {
        w.u32(a);
        w.f32s(v);
    }
    write_file(path, &w.finish())
}

pub fn load_word2vec(path: &Path) -> Result<(Semantic, usize, Stamp)> {
    let bytes = read_file(path)?;
    let (mut r, stamp) = BinReader::open(path, &bytes, b"CFW2")?;
    let m = r.usize("vocab size")?;
    let dim = r.usize("dim")?;
    let rows = r.usize("row count")?;
    let mut out = BTreeMap::new();
    for i in 0..rows {
        let a = r.u32(&format!("row {i} attribute id"))?;
        if a as usize >= m || out.contains_key(&a) {
            return Err(r.err(format!("row {i}: bad attribute id {a}")));
        }
        out.insert(a, r.f32s(dim, &format!("row {i} vector"))?);
    }
    r.finish()?;
    Ok((out, m, stamp))
}

pub fn save_embedding(path: &Path, stamp: &Stamp, model: &EmbeddingModel) -> Result<()> {
    let mut w = BinWriter::new(b"CFEM", stamp);
    w.usize(model.feature_dim());
    w.usize(model.dim());
    w.usize(model.vocab_size());
    w.f32(model.margin);
    w.f32s(model.image_proj.as_slice());
    w.f32s(model.attr_embed.as_slice());
    write_file(path, &w.finish())
}

pub fn load_embedding(path: &Path) -> Result<(EmbeddingModel, Stamp)> {
    let bytes = read_file(path)?;
    let (mut r, stamp) = BinReader::open(path, &bytes, b"CFEM")?;
    let k = r.usize("K'")?;
    let d = r.usize("D")?;
    let m = r.usize("M")?;
    let margin = r.f32("margin")?;
    let wi = r.f32s(d * k, "W_I")?;
    let wt = r.f32s(m * d, "W_T")?;
    r.finish()?;
    let model = EmbeddingModel {
        image_proj: Matrix::from_vec(d, k, wi)?,
        attr_embed: Matrix::from_vec(m, d, wt)?,
        margin,
    };
    Ok((model, stamp))
}

pub fn save_aams(path: &Path, stamp: &Stamp, height: usize, width: usize, vocab_size: usize, set: &AamSet) -> Result<()> {
    let mut w = BinWriter::new(b"CFAM", stamp);
    w.usize(height);
    w.usize(width);
    w.usize(vocab_size);
    for (&a, map) in &set.maps {
        w.u32(a);
        w.u32(map.support);
        w.f32s(&map.grid);
    }
    for &a in &set.skipped {
        w.u32(a);
        w.u32(0);
    }
    write_file(path, &w.finish())
}

pub fn load_aams(path: &Path) -> Result<(AamSet, Stamp)> {
    let bytes = read_file(path)?;
    let (mut r, stamp) = BinReader::open(path, &bytes, b"CFAM")?;
    let height = r.usize("H")?;
    let width = r.usize("W")?;
    let m = r.usize("vocab size")?;
    let mut set = AamSet::default();
    let mut seen = vec![false; m];
    for i in 0..m {
        let a = r.u32(&format!("record {i} attribute id"))?;
        match seen.get_mut(a as usize) {
            Some(s) if !*s => *s = true,
            _ => return Err(r.err(format!("record {i}: bad or repeated attribute id {a}"))),
        }
        let support = r.u32(&format!("record {i} support"))?;
        if support == 0 {
            set.skipped.push(a);
            continue;
        }
        let grid = r.f32s(height * width, &format!("record {i} cells"))?;
        set.maps.insert(a, AttributeMap { attribute: a, kind: MapKind::Aam, height, width, grid, support });
    }
    r.finish()?;
    set.skipped.sort_unstable();
    Ok((set, stamp))
}

pub fn save_subspace(path: &Path, stamp: &Stamp, s: &SubspaceModel) -> Result<()> {
    let mut w = BinWriter::new(b"CFSS", stamp);
    w.u32(s.concept);
    w.usize(s.attributes.len());
    for &a in &s.attributes {
        w.u32(a);
    }
    w.usize(s.hidden_dim());
    w.usize(s.input_dim());
    w.f32s(s.hidden_w.as_slice());
    w.f32s(&s.hidden_b);
    w.f32s(s.out_w.as_slice());
    w.f32s(&s.out_b);
    write_file(path, &w.finish())
}

pub fn load_subspace(path: &Path) -> Result<(SubspaceModel, Stamp)> {
    let bytes = read_file(path)?;
    let (mut r, stamp) = BinReader::open(path, &bytes, b"CFSS")?;
    let concept = r.u32("concept id")?;
    let n = r.usize("attribute count")?;
    let attributes = (0..n).map(|i| r.u32(&format!("attribute {i}"))).collect::<Result<Vec<_>>>()?;
    let hidden = r.usize("hidden width")?;
    let d = r.usize("input dim")?;
    let hidden_w = Matrix::from_vec(hidden, d, r.f32s(hidden * d, "hidden weights")?)?;
    let hidden_b = r.f32s(hidden, "hidden biases")?;
    let out_w = Matrix::from_vec(n + 1, hidden, r.f32s((n + 1) * hidden, "output weights")?)?;
    let out_b = r.f32s(n + 1, "output biases")?;
    r.finish()?;
    Ok((SubspaceModel { concept, attributes, hidden_w, hidden_b, out_w, out_b }, stamp))
}

/// `label<TAB>cluster` per clustered attribute, ascending attribute id.
pub fn save_concepts(path: &Path, stamp: &Stamp, vocab: &Vocab, a: &ConceptAssignment) -> Result<()> {
    let mut out = text_header("CFCA", stamp);
    writeln!(out, "# k {}", a.k).unwrap();
    for &(attr, c) in &a.assignment {
        writeln!(out, "{}\t{c}", vocab.label(attr).ok_or(conceptlab_core::Error::UnknownAttribute(attr))?).unwrap();
    }
    write_file(path, out.as_bytes())
}

pub fn load_concepts(path: &Path, vocab: &Vocab) -> Result<(ConceptAssignment, Stamp)> {
    let text = read_text(path)?;
    let (stamp, lines) = parse_text_header(path, &text, "CFCA")?;
    let k = text
        .lines()
        .find_map(|l| l.strip_prefix("# k "))
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::format(path, "missing \"# k\" line"))?;
    let mut assignment = Vec::new();
    for (no, line) in lines {
        let bad = |msg: String| Error::format(path, format!("line {no}: {msg}"));
        let (label, c) = line.split_once('\t').ok_or_else(|| bad("expected label<TAB>cluster".into()))?;
        let attr = vocab.id(label).ok_or_else(|| bad(format!("unknown attribute {label:?}")))?;
        let c: ConceptId = c.parse().map_err(|_| bad(format!("bad cluster id {c:?}")))?;
        if c as usize >= k {
            return Err(bad(format!("cluster {c} outside k = {k}")));
        }
        assignment.push((attr, c));
    }
    assignment.sort_unstable();
    if assignment.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::format(path, "attribute listed twice"));
    }
    Ok((ConceptAssignment { k, assignment, centroids: Vec::new(), inertia: 0.0 }, stamp))
}

pub fn save_scores(path: &Path, stamp: &Stamp, scores: Option<&ClusterScores>) -> Result<()> {
    let mut out = text_header("CFSC", stamp);
    match scores {
        Some(s) => {
            writeln!(out, "homogeneity\t{}", fmt_f(s.homogeneity)).unwrap();
            writeln!(out, "completeness\t{}", fmt_f(s.completeness)).unwrap();
            writeln!(out, "v_measure\t{}", fmt_f(s.v_measure)).unwrap();
        }
        None => out.push_str("ground_truth\tnone\n"),
    }
    write_file(path, out.as_bytes())
}

pub fn load_scores(path: &Path) -> Result<(BTreeMap<String, String>, Stamp)> {
    let text = read_text(path)?;
    let (stamp, lines) = parse_text_header(path, &text, "CFSC")?;
    let mut out = BTreeMap::new();
    for (no, line) in lines {
        let (k, v) = line.split_once('\t').ok_or_else(|| Error::format(path, format!("line {no}: expected key<TAB>value")))?;
        out.insert(k.to_string(), v.to_string());
    }
    Ok((out, stamp))
}

/// One row per trained concept subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub concept: ConceptId,
    pub file: String,
    pub positives: usize,
    pub negatives: usize,
}

pub fn save_subspace_index(path: &Path, stamp: &Stamp, entries: &[IndexEntry]) -> Result<()> {
    let mut out = text_header("CFSI", stamp);
    for e in entries {
        writeln!(out, "{}\t{}\t{}\t{}", e.concept, e.file, e.positives, e.negatives).unwrap();
    }
    write_file(path, out.as_bytes())
}

pub fn load_subspace_index(path: &Path) -> Result<(Vec<IndexEntry>, Stamp)> {
    let text = read_text(path)?;
    let (stamp, lines) = parse_text_header(path, &text, "CFSI")?;
    let mut out = Vec::new();
    for (no, line) in lines {
        let bad = || Error::format(path, format!("line {no}: expected concept<TAB>file<TAB>positives<TAB>negatives"));
        let f: Vec<&str> = line.split('\t').collect();
        let [c, file, p, n] = f[..] else { return Err(bad()) };
        if file.contains('/') || file.contains('\\') {
            return Err(Error::format(path, format!("line {no}: file {file:?} must be a plain name")));
        }
        out.push(IndexEntry {
            concept: c.parse().map_err(|_| bad())?,
            file: file.to_string(),
            positives: p.parse().map_err(|_| bad())?,
            negatives: n.parse().map_err(|_| bad())?,
        });
    }
    Ok((out, stamp))
}
