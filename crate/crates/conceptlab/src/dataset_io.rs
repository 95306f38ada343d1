//! Dataset directories: `manifest`, `features.bin`, `descriptions`.
//!
//! ```text
//! manifest                         descriptions
//! CFDS 1                           0 3 8 13 18 29
//! dims 8 8 64                      1 0 9 11 ...
//! items 2000
//! config <hex>          (optional)
//! vocab 0 red
//! concept 0 color       (optional, with truth lines)
//! truth 0 0
//! split train 0 2 3 ...
//! ```
//!
//! `features.bin` holds the items' maps as little-endian `f32`, in id order,
//! each row-major `H×W×K`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use conceptlab_core::corpus::{Dataset, Dims, FeatureMap, Item, Split, Splits, Vocab};
use conceptlab_core::{AttrId, ConceptId, ItemId};

use crate::error::{Error, Result};
use crate::format::{read_file, read_text, require, write_file, Hash};

pub const MANIFEST: &str = "manifest";
pub const FEATURES: &str = "features.bin";
pub const DESCRIPTIONS: &str = "descriptions";

pub fn dataset_files(dir: &Path) -> [PathBuf; 3] {
    [dir.join(MANIFEST), dir.join(FEATURES), dir.join(DESCRIPTIONS)]
}

pub fn save_dataset(ds: &Dataset, dir: &Path, config: Option<Hash>) -> Result<()> {
    ds.validate()?;
    if let Some(bad) = ds.concept_names.iter().find(|n| n.is_empty() || n.chars().any(char::is_whitespace)) {
        return Err(Error::format(dir.join(MANIFEST), format!("concept name {bad:?} must be one word")));
    }
    let d = ds.dims;
    let mut m = String::new();
    writeln!(m, "CFDS 1").unwrap();
    writeln!(m, "dims {} {} {}", d.height, d.width, d.channels).unwrap();
    writeln!(m, "items {}", ds.items.len()).unwrap();
    if let Some(h) = config {
        writeln!(m, "config {h}").unwrap();
    }
    for (id, label) in ds.vocab.labels().iter().enumerate() {
        writeln!(m, "vocab {id} {label}").unwrap();
    }
    if let Some(gt) = &ds.ground_truth {
        for (id, name) in ds.concept_names.iter().enumerate() {
            writeln!(m, "concept {id} {name}").unwrap();
        }
        for (a, c) in gt.iter().enumerate() {
            writeln!(m, "truth {a} {c}").unwrap();
        }
    }
    for split in Split::ALL {
        let mut line = format!("split {}", split.name());
        for id in ds.split(split) {
            write!(line, " {id}").unwrap();
        }
        writeln!(m, "{line}").unwrap();
    }

    let mut features = Vec::with_capacity(ds.items.len() * d.len() * 4);
    let mut descriptions = String::new();
    for item in &ds.items {
        for &v in item.feature_map.as_slice() {
            features.extend_from_slice(&v.to_le_bytes());
        }
        write!(descriptions, "{}", item.id).unwrap();
        for a in &item.description {
            write!(descriptions, " {a}").unwrap();
        }
        descriptions.push('\n');
    }
    write_file(&dir.join(FEATURES), &features)?;
    write_file(&dir.join(DESCRIPTIONS), descriptions.as_bytes())?;
    write_file(&dir.join(MANIFEST), m.as_bytes())
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, field: &str, s: Option<&str>) -> Result<T> {
    let s = s.ok_or_else(|| Error::format(path, format!("line {line}: missing {field}")))?;
    s.parse().map_err(|_| Error::format(path, format!("line {line}: bad {field} {s:?}")))
}

struct Manifest {
    dims: Dims,
    n_items: usize,
    config: Option<Hash>,
    vocab: Vec<String>,
    concepts: Vec<String>,
    truth: Vec<Option<ConceptId>>,
    splits: Splits,
}

fn parse_manifest(path: &Path, text: &str) -> Result<Manifest> {
    let bad = |line: usize, msg: String| Error::format(path, format!("line {line}: {msg}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, "CFDS 1")) => {}
        Some((_, l)) if l.starts_with("CFDS ") => return Err(bad(1, format!("unsupported version in {l:?}"))),
        _ => return Err(bad(1, "missing \"CFDS 1\" magic".into())),
    }
    let mut dims = None;
    let mut n_items = None;
    let mut config = None;
    let mut vocab: Vec<String> = Vec::new();
    let mut concepts: Vec<String> = Vec::new();
    let mut truth: Vec<Option<ConceptId>> = Vec::new();
    let mut splits = Splits::default();
    for (no, line) in lines {
        let mut f = line.split_ascii_whitespace();
        match f.next() {
            None => {}
            Some("dims") => {
                let h = parse_num(path, no, "height", f.next())?;
                let w = parse_num(path, no, "width", f.next())?;
                let k = parse_num(path, no, "channels", f.next())?;
                dims = Some(Dims::new(h, w, k));
            }
            Some("items") => n_items = Some(parse_num::<usize>(path, no, "item count", f.next())?),
            Some("config") => {
                let h = f.next().and_then(Hash::parse).ok_or_else(|| bad(no, "malformed config hash".into()))?;
                config = Some(h);
            }
            Some("vocab") => {
                let id: usize = parse_num(path, no, "attribute id", f.next())?;
                let label = f.next().ok_or_else(|| bad(no, "missing label".into()))?;
                if id != vocab.len() {
                    return Err(bad(no, format!("attribute id {id} out of order, expected {}", vocab.len())));
                }
                vocab.push(label.to_string());
            }
            Some("concept") => {
                let id: usize = parse_num(path, no, "concept id", f.next())?;
                let name = f.next().ok_or_else(|| bad(no, "missing concept name".into()))?;
                if id != concepts.len() {
                    return Err(bad(no, format!("concept id {id} out of order, expected {}", concepts.len())));
                }
                concepts.push(name.to_string());
            }
            Some("truth") => {
                let a: usize = parse_num(path, no, "attribute id", f.next())?;
                let c: ConceptId = parse_num(path, no, "concept id", f.next())?;
                if a >= truth.len() {
                    truth.resize(a + 1, None);
                }
                if truth[a].replace(c).is_some() {
                    return Err(bad(no, format!("second truth line for attribute {a}")));
                }
            }
            Some("split") => {
                let name = f.next().unwrap_or("");
                let split = Split::from_name(name).ok_or_else(|| bad(no, format!("unknown split {name:?}")))?;
                let ids = f.map(|s| s.parse::<ItemId>().map_err(|_| bad(no, format!("bad item id {s:?}")))).collect::<Result<Vec<_>>>()?;
                let slot = match split {
                    Split::Train => &mut splits.train,
                    Split::Val => &mut splits.val,
                    Split::Test => &mut splits.test,
                };
                slot.extend(ids);
            }
            Some(key) => return Err(bad(no, format!("unknown key {key:?}"))),
        }
    }
    let dims = dims.ok_or_else(|| Error::format(path, "missing dims line"))?;
    let n_items = n_items.ok_or_else(|| Error::format(path, "missing items line"))?;
    Ok(Manifest { dims, n_items, config, vocab, concepts, truth, splits })
}

/// Loads and validates a dataset directory; also returns the config hash it
/// was written under, if any.
pub fn load_dataset(dir: &Path) -> Result<(Dataset, Option<Hash>)> {
    require(&dataset_files(dir))?;
    let mpath = dir.join(MANIFEST);
    let m = parse_manifest(&mpath, &read_text(&mpath)?)?;
    let vocab = Vocab::new(m.vocab).map_err(|e| Error::format(&mpath, e.to_string()))?;

    let ground_truth = if m.truth.is_empty() {
        None
    } else {
        let gt: Option<Vec<ConceptId>> = m.truth.iter().copied().collect();
        let gt = gt.filter(|g| g.len() == vocab.len()).ok_or_else(|| Error::format(&mpath, "truth lines must cover every attribute"))?;
        if let Some(&c) = gt.iter().find(|&&c| c as usize >= m.concepts.len()) {
            return Err(Error::format(&mpath, format!("truth names concept {c} with no concept line")));
        }
        Some(gt)
    };

    let fpath = dir.join(FEATURES);
    let raw = read_file(&fpath)?;
    let per_item = m.dims.len();
    let want = m.n_items * per_item * 4;
    if raw.len() != want {
        return Err(Error::format(
            &fpath,
            format!(
                "holds {} bytes but {} items of {}x{}x{} floats need {want}",
                raw.len(),
                m.n_items,
                m.dims.height,
                m.dims.width,
                m.dims.channels
            ),
        ));
    }
    let floats: Vec<f32> = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();

    let dpath = dir.join(DESCRIPTIONS);
    let text = read_text(&dpath)?;
    let mut items = Vec::with_capacity(m.n_items);
    for (idx, line) in text.lines().enumerate() {
        let bad = |msg: String| Error::format(&dpath, format!("line {} (item record {idx}): {msg}", idx + 1));
        let mut f = line.split_ascii_whitespace();
        let id: ItemId = f.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("missing item id".into()))?;
        if id as usize != idx {
            return Err(bad(format!("item id {id} out of order")));
        }
        if idx >= m.n_items {
            return Err(bad(format!("more descriptions than the {} items in the manifest", m.n_items)));
        }
        let description = f
            .map(|s| s.parse::<AttrId>().map_err(|_| bad(format!("bad attribute id {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(&a) = description.iter().find(|&&a| a as usize >= vocab.len()) {
            return Err(bad(format!("unknown attribute id {a}")));
        }
        let fm = FeatureMap::new(m.dims, floats[idx * per_item..(idx + 1) * per_item].to_vec())?;
        items.push(Item { id, feature_map: fm, description });
    }
    if items.len() != m.n_items {
        return Err(Error::format(&dpath, format!("{} descriptions for {} items", items.len(), m.n_items)));
    }
    let ds = Dataset {
        dims: m.dims,
        vocab,
        items,
        concept_names: if ground_truth.is_some() { m.concepts } else { Vec::new() },
        ground_truth,
        splits: m.splits,
    };
    ds.validate().map_err(|e| Error::format(dir, e.to_string()))?;
    Ok((ds, m.config))
}
