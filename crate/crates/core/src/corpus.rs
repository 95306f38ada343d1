//! Datasets of feature maps paired with attribute descriptions.
//!
//! The synthetic generator plants known concepts: every attribute owns one
//! feature channel and activates it over its concept's spatial mask, while
//! descriptions list the chosen attributes ordered by a per-concept slot.
//! Ground truth (attribute → concept) is kept alongside so clusterings can be
//! scored.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{AttrId, ConceptId, Error, ItemId, Result};

/// Base of the geometric falloff with which an ordinal concept's attribute
/// also lights the channels of the others: `spill^distance` in list order.
pub const ORDINAL_SPILL: f32 = 0.7;

/// Spatial grid and channel count of every feature map in a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Dims {
    pub const fn new(height: usize, width: usize, channels: usize) -> Self {
        Self { height, width, channels }
    }

    #[inline]
    pub const fn cells(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub const fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for Dims {
    fn default() -> Self {
        Self::new(8, 8, 64)
    }
}

/// `H×W×K` activation grid, row-major with channels innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    dims: Dims,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(dims: Dims, data: Vec<f32>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::DimensionMismatch { expected: dims.len(), actual: data.len() });
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Dims) -> Self {
        Self { dims, data: vec![0.0; dims.len()] }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f32 {
        self.data[(i * self.dims.width + j) * self.dims.channels + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f32) {
        self.data[(i * self.dims.width + j) * self.dims.channels + k] = v;
    }

    /// Channel vector at flattened cell index `i * W + j`.
    #[inline]
    pub fn cell(&self, cell: usize) -> &[f32] {
        let k = self.dims.channels;
        &self.data[cell * k..(cell + 1) * k]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// A planted concept for the synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptSpec {
    pub name: String,
    pub attributes: Vec<String>,
    /// `H·W` cells, row-major; `true` where the concept's attributes activate.
    pub spatial_mask: Vec<bool>,
    /// Position of this concept's word in generated descriptions.
    pub semantic_slot: u32,
    /// Present in an item with probability 0.5 instead of always.
    pub optional: bool,
    /// Attributes form an ordered scale; see [`ORDINAL_SPILL`].
    pub ordinal: bool,
    /// Attributes placed at a slot other than `semantic_slot`.
    pub slot_overrides: Vec<(String, u32)>,
}

impl ConceptSpec {
    fn slot_of(&self, label: &str) -> u32 {
        self.slot_overrides
            .iter()
            .find(|(l, _)| l == label)
            .map_or(self.semantic_slot, |&(_, s)| s)
    }
}

/// Builds a mask from rows of `#` (active) and `.` (inactive).
pub fn mask_from_rows(rows: &[&str]) -> Vec<bool> {
    rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect()
}

/// Six planted concepts × five attributes on an 8×8 grid.
///
/// `color` and `pattern` share one body mask, so spatial evidence alone cannot
/// separate them; `mini` is written between the neckline and sleeve words
/// rather than last with the other lengths, so word context alone misplaces
/// it.
pub fn default_concepts() -> Vec<ConceptSpec> {
    let body = mask_from_rows(&[
        "........", "..####..", "..####..", "..####..", "..####..", "..####..", "........", "........",
    ]);
    let spec = |name: &str, attrs: &[&str], mask: Vec<bool>, slot: u32| ConceptSpec {
        name: name.to_string(),
        attributes: attrs.iter().map(|a| a.to_string()).collect(),
        spatial_mask: mask,
        semantic_slot: slot,
        optional: false,
        ordinal: false,
        slot_overrides: Vec::new(),
    };
    let mut out = vec![
        spec("color", &["red", "blue", "black", "white", "green"], body.clone(), 0),
        spec("pattern", &["floral", "striped", "plaid", "dotted", "solid"], body, 20),
        spec(
            "neckline",
            &["v-neck", "scoop-neck", "crew-neck", "halter", "boat-neck"],
            mask_from_rows(&[
                ".######.", ".######.", "........", "........", "........", "........",
                "........", "........",
            ]),
            30,
        ),
        spec(
            "sleeve",
            &["sleeveless", "short-sleeve", "long-sleeve", "cap-sleeve", "bell-sleeve"],
            mask_from_rows(&[
                "........", "##....##", "##....##", "##....##", "##....##", "........",
                "........", "........",
            ]),
            40,
        ),
        spec(
            "waist",
            &["belted", "wrap", "empire", "peplum", "drop-waist"],
            mask_from_rows(&[
                "........", "........", "........", ".######.", ".######.", "........",
                "........", "........",
            ]),
            50,
        ),
        spec(
            "length",
            &["maxi", "midi", "knee-length", "mini", "micro"],
            mask_from_rows(&[
                "........", "........", "........", "........", "........", "........",
                "########", "########",
            ]),
            60,
        ),
    ];
    out[4].optional = true;
    out[5].ordinal = true;
    out[5].slot_overrides.push(("mini".to_string(), 35));
    out
}

/// Attribute id ↔ label table. Ids are positions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocab {
    labels: Vec<String>,
    index: BTreeMap<String, AttrId>,
}

impl Vocab {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (id, label) in labels.iter().enumerate() {
            if label.is_empty() || label.chars().any(char::is_whitespace) {
                return Err(Error::InvalidDataset(format!("bad attribute label {label:?}")));
            }
            if index.insert(label.clone(), id as AttrId).is_some() {
                return Err(Error::InvalidDataset(format!("duplicate attribute label {label:?}")));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, id: AttrId) -> Option<&str> {
        self.labels.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, label: &str) -> Option<AttrId> {
        self.index.get(label).copied()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: ItemId,
    pub feature_map: FeatureMap,
    /// Attribute ids in description order.
    pub description: Vec<AttrId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|sp| sp.name() == s)
    }
}

/// Item ids per split, each list ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Splits {
    pub train: Vec<ItemId>,
    pub val: Vec<ItemId>,
    pub test: Vec<ItemId>,
}

impl Splits {
    pub fn get(&self, split: Split) -> &[ItemId] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn split_of(&self, id: ItemId) -> Option<Split> {
        Split::ALL.into_iter().find(|&s| self.get(s).binary_search(&id).is_ok())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dims: Dims,
    pub vocab: Vocab,
    /// Item `i` has id `i`.
    pub items: Vec<Item>,
    /// Planted concept per attribute id; only known for synthetic data.
    pub ground_truth: Option<Vec<ConceptId>>,
    /// Names of the planted concepts, indexed by concept id.
    pub concept_names: Vec<String>,
    pub splits: Splits,
}

impl Dataset {
    pub fn item(&self, id: ItemId) -> Result<&Item> {
        self.items.get(id as usize).ok_or(Error::UnknownItem(id))
    }

    pub fn split(&self, split: Split) -> &[ItemId] {
        self.splits.get(split)
    }

    pub fn concept_of(&self, attr: AttrId) -> Option<ConceptId> {
        self.ground_truth.as_ref().and_then(|gt| gt.get(attr as usize).copied())
    }

    /// Description of an item as labels.
    pub fn description_labels(&self, id: ItemId) -> Result<Vec<&str>> {
        let item = self.item(id)?;
        item.description
            .iter()
            .map(|&a| self.vocab.label(a).ok_or(Error::UnknownAttribute(a)))
            .collect()
    }

    /// Checks every structural invariant; the message names the first
    /// offending record.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDataset(msg));
        let m = self.vocab.len() as AttrId;
        for (idx, item) in self.items.iter().enumerate() {
            if item.id as usize != idx {
                return bad(format!("item record {idx}: id {} out of order", item.id));
            }
            if item.feature_map.dims() != self.dims {
                return bad(format!("item record {idx}: feature map dims differ from header"));
            }
            if item.description.is_empty() {
                return bad(format!("item record {idx}: empty description"));
            }
            let mut seen = BTreeSet::new();
            for &a in &item.description {
                if a >= m {
                    return bad(format!("item record {idx}: unknown attribute id {a}"));
                }
                if !seen.insert(a) {
                    return bad(format!("item record {idx}: duplicate attribute id {a}"));
                }
            }
        }
        if let Some(gt) = &self.ground_truth {
            if gt.len() != self.vocab.len() {
                return bad(format!("ground truth covers {} of {} attributes", gt.len(), m));
            }
        }
        let n = self.items.len();
        let mut owner = vec![false; n];
        for split in Split::ALL {
            let ids = self.splits.get(split);
            if ids.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("split {} is not strictly ascending", split.name()));
            }
            for &id in ids {
                match owner.get_mut(id as usize) {
                    None => return bad(format!("split {} names unknown item {id}", split.name())),
                    Some(true) => return bad(format!("item {id} belongs to two splits")),
                    Some(slot) => *slot = true,
                }
            }
        }
        if let Some(missing) = owner.iter().position(|&o| !o) {
            return bad(format!("item {missing} belongs to no split"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub dims: Dims,
    pub n_items: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub train_fraction: f64,
    pub val_fraction: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            dims: Dims::default(),
            n_items: 2000,
            noise_sigma: 0.1,
            seed: 7,
            train_fraction: 0.6,
            val_fraction: 0.1,
        }
    }
}

fn check_concepts(concepts: &[ConceptSpec], dims: Dims) -> Result<()> {
    let cfg = |msg: String| Err(Error::Config(msg));
    if concepts.is_empty() {
        return cfg("no concepts specified".into());
    }
    let total: usize = concepts.iter().map(|c| c.attributes.len()).sum();
    if dims.channels < total {
        return cfg(format!("{} channels cannot hold {total} attribute signatures", dims.channels));
    }
    let mut labels = BTreeSet::new();
    let mut slots = BTreeSet::new();
    for c in concepts {
        if c.attributes.len() < 2 {
            return cfg(format!("concept {:?} needs at least two attributes", c.name));
        }
        if c.spatial_mask.len() != dims.cells() {
            return cfg(format!("concept {:?} mask has {} cells, expected {}", c.name, c.spatial_mask.len(), dims.cells()));
        }
        if !c.spatial_mask.iter().any(|&b| b) {
            return cfg(format!("concept {:?} mask has no active cell", c.name));
        }
        if !slots.insert(c.semantic_slot) {
            return cfg(format!("semantic slot {} used twice", c.semantic_slot));
        }
        for a in &c.attributes {
            if !labels.insert(a.as_str()) {
                return cfg(format!("attribute {a:?} appears in two concepts"));
            }
        }
        for (label, _) in &c.slot_overrides {
            if !c.attributes.contains(label) {
                return cfg(format!("slot override for {label:?} outside concept {:?}", c.name));
            }
        }
    }
    Ok(())
}

/// Generates a planted dataset. Identical inputs give bit-identical output.
pub fn generate_synthetic(concepts: &[ConceptSpec], cfg: &SyntheticConfig) -> Result<Dataset> {
    let dims = cfg.dims;
    check_concepts(concepts, dims)?;
    if cfg.n_items == 0 {
        return Err(Error::Config("n_items must be positive".into()));
    }
    if !(cfg.noise_sigma >= 0.0 && cfg.noise_sigma.is_finite()) {
        return Err(Error::Config("noise_sigma must be finite and non-negative".into()));
    }
    let (tf, vf) = (cfg.train_fraction, cfg.val_fraction);
    if !(tf > 0.0 && vf >= 0.0 && tf + vf <= 1.0) {
        return Err(Error::Config("split fractions must satisfy 0 < train, 0 <= val, train + val <= 1".into()));
    }

    let mut labels = Vec::new();
    let mut ground_truth = Vec::new();
    // (slot, concept index) per attribute id, for description ordering
    let mut order_key = Vec::new();
    let mut first_id = Vec::new();
    for (ci, c) in concepts.iter().enumerate() {
        first_id.push(labels.len());
        for a in &c.attributes {
            order_key.push((c.slot_of(a), ci));
            labels.push(a.clone());
            ground_truth.push(ci as ConceptId);
        }
    }
    let vocab = Vocab::new(labels)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|_| Error::Config("invalid noise_sigma".into()))?;
    let mut items = Vec::with_capacity(cfg.n_items);
    for id in 0..cfg.n_items {
        let mut chosen: Vec<(usize, usize)> = Vec::new(); // (concept, index within concept)
        for (ci, c) in concepts.iter().enumerate() {
            if c.optional && !rng.random_bool(0.5) {
                continue;
            }
            chosen.push((ci, rng.random_range(0..c.attributes.len())));
        }
        if chosen.is_empty() {
            // every concept optional and all skipped: keep descriptions nonempty
            let ci = rng.random_range(0..concepts.len());
            chosen.push((ci, rng.random_range(0..concepts[ci].attributes.len())));
        }

        let mut fm = FeatureMap::zeros(dims);
        for &(ci, ai) in &chosen {
            let c = &concepts[ci];
            let base = first_id[ci];
            let mut paint = |channel: usize, amp: f32| {
                for (cell, _) in c.spatial_mask.iter().enumerate().filter(|(_, &on)| on) {
                    fm.data[cell * dims.channels + channel] += amp;
                }
            };
            paint(base + ai, 1.0);
            if c.ordinal {
                for other in (0..c.attributes.len()).filter(|&o| o != ai) {
                    paint(base + other, libm::powf(ORDINAL_SPILL, ai.abs_diff(other) as f32));
                }
            }
        }
        if cfg.noise_sigma > 0.0 {
            for v in &mut fm.data {
                *v += noise.sample(&mut rng) as f32;
            }
        }

        let mut description: Vec<AttrId> = chosen.iter().map(|&(ci, ai)| (first_id[ci] + ai) as AttrId).collect();
        description.sort_by_key(|&a| order_key[a as usize]);
        items.push(Item { id: id as ItemId, feature_map: fm, description });
    }

    let mut ids: Vec<ItemId> = (0..cfg.n_items as ItemId).collect();
    ids.shuffle(&mut rng);
    let n_train = libm::round(cfg.n_items as f64 * tf) as usize;
    let n_val = (libm::round(cfg.n_items as f64 * vf) as usize).min(cfg.n_items - n_train);
    let take = |range: core::ops::Range<usize>| {
        let mut v = ids[range].to_vec();
        v.sort_unstable();
        v
    };
    let splits = Splits {
        train: take(0..n_train),
        val: take(n_train..n_train + n_val),
        test: take(n_train + n_val..cfg.n_items),
    };

    let dataset = Dataset {
        dims,
        vocab,
        items,
        ground_truth: Some(ground_truth),
        concept_names: concepts.iter().map(|c| c.name.clone()).collect(),
        splits,
    };
    debug_assert!(dataset.validate().is_ok());
    Ok(dataset)
}

/// Two items whose descriptions differ in exactly one attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct QueryPair {
    pub query: ItemId,
    pub target: ItemId,
    /// In the target's description only.
    pub added: AttrId,
    /// In the query's description only.
    pub removed: AttrId,
}

/// All ordered pairs within `split` whose descriptions differ by swapping one
/// attribute for another of the same concept (any swap when the dataset has no
/// ground truth). Sorted by (query, target).
pub fn make_query_pairs(dataset: &Dataset, split: &[ItemId]) -> Vec<QueryPair> {
    // bucket each item under every description-minus-one-attribute key
    let mut buckets: BTreeMap<Vec<AttrId>, Vec<(ItemId, AttrId)>> = BTreeMap::new();
    for &id in split {
        let Ok(item) = dataset.item(id) else { continue };
        let mut sorted = item.description.clone();
        sorted.sort_unstable();
        for skip in 0..sorted.len() {
            let mut key = sorted.clone();
            let removed = key.remove(skip);
            buckets.entry(key).or_default().push((id, removed));
        }
    }
    let mut pairs = Vec::new();
    for members in buckets.values() {
        for &(q, removed) in members {
            for &(t, added) in members {
                if q == t || removed == added {
                    continue;
                }
                let same_concept = match &dataset.ground_truth {
                    Some(_) => dataset.concept_of(removed) == dataset.concept_of(added),
                    None => true,
                };
                if same_concept {
                    pairs.push(QueryPair { query: q, target: t, added, removed });
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(n: usize, sigma: f64) -> SyntheticConfig {
        SyntheticConfig { n_items: n, noise_sigma: sigma, ..SyntheticConfig::default() }
    }

    #[test]
    fn default_corpus_shape() {
        let concepts = default_concepts();
        let ds = generate_synthetic(&concepts, &small_cfg(2000, 0.1)).unwrap();
        assert_eq!(ds.vocab.len(), 30);
        let mandatory = concepts.iter().filter(|c| !c.optional).count();
        for item in &ds.items {
            assert!((mandatory..=6).contains(&item.description.len()));
        }
        ds.validate().unwrap();
    }

    #[test]
    fn same_seed_same_dataset() {
        let c = default_concepts();
        let a = generate_synthetic(&c, &small_cfg(50, 0.3)).unwrap();
        let b = generate_synthetic(&c, &small_cfg(50, 0.3)).unwrap();
        assert_eq!(a, b);
        let other = generate_synthetic(&c, &SyntheticConfig { seed: 8, ..small_cfg(50, 0.3) }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn zero_noise_channel_is_exact_mask() {
        let c = default_concepts();
        let ds = generate_synthetic(&c, &small_cfg(40, 0.0)).unwrap();
        let gt = ds.ground_truth.as_ref().unwrap();
        for item in &ds.items {
            for &a in &item.description {
                let mask = &c[gt[a as usize] as usize].spatial_mask;
                for (cell, &on) in mask.iter().enumerate() {
                    let expected = if on { 1.0 } else { 0.0 };
                    assert_eq!(item.feature_map.cell(cell)[a as usize], expected);
                }
            }
        }
    }

    #[test]
    fn identical_descriptions_identical_maps_without_noise() {
        let c = default_concepts();
        let ds = generate_synthetic(&c, &small_cfg(400, 0.0)).unwrap();
        let mut by_desc: BTreeMap<Vec<AttrId>, &FeatureMap> = BTreeMap::new();
        let mut collisions = 0;
        for item in &ds.items {
            if let Some(prev) = by_desc.insert(item.description.clone(), &item.feature_map) {
                assert_eq!(prev, &item.feature_map);
                collisions += 1;
            }
        }
        assert!(collisions > 0, "corpus too small to exercise the property");
    }

    #[test]
    fn descriptions_follow_slots() {
        let c = default_concepts();
        let ds = generate_synthetic(&c, &small_cfg(200, 0.1)).unwrap();
        let mini = ds.vocab.id("mini").unwrap();
        let red = ds.vocab.id("red").unwrap();
        let halter = ds.vocab.id("halter").unwrap();
        for item in &ds.items {
            let d = &item.description;
            if d.contains(&mini) && d.contains(&red) && d.contains(&halter) {
                let pos = |a| d.iter().position(|&x| x == a).unwrap();
                assert!(pos(red) < pos(halter) && pos(halter) < pos(mini));
            }
        }
    }

    #[test]
    fn config_errors() {
        let mut c = default_concepts();
        assert!(matches!(generate_synthetic(&[], &small_cfg(5, 0.0)), Err(Error::Config(_))));
        let tight = SyntheticConfig { dims: Dims::new(8, 8, 29), ..small_cfg(5, 0.0) };
        assert!(matches!(generate_synthetic(&c, &tight), Err(Error::Config(_))));
        c[1].attributes[0] = "red".into();
        assert!(matches!(generate_synthetic(&c, &small_cfg(5, 0.0)), Err(Error::Config(_))));
    }

    #[test]
    fn splits_partition_items() {
        let ds = generate_synthetic(&default_concepts(), &small_cfg(101, 0.1)).unwrap();
        let total = ds.splits.train.len() + ds.splits.val.len() + ds.splits.test.len();
        assert_eq!(total, 101);
        assert_eq!(ds.splits.split_of(ds.splits.test[0]), Some(Split::Test));
    }

    fn tiny_dataset(descs: &[&[&str]]) -> Dataset {
        let c = vec![
            ConceptSpec {
                name: "color".into(),
                attributes: vec!["red".into(), "blue".into()],
                spatial_mask: vec![true; 4],
                semantic_slot: 0,
                optional: false,
                ordinal: false,
                slot_overrides: vec![],
            },
            ConceptSpec {
                name: "neck".into(),
                attributes: vec!["v-neck".into(), "crew".into()],
                spatial_mask: vec![true, false, false, false],
                semantic_slot: 1,
                optional: false,
                ordinal: false,
                slot_overrides: vec![],
            },
        ];
        let mut ds = generate_synthetic(&c, &SyntheticConfig { dims: Dims::new(2, 2, 4), n_items: descs.len(), ..small_cfg(1, 0.0) }).unwrap();
        for (item, d) in ds.items.iter_mut().zip(descs) {
            item.description = d.iter().map(|l| ds.vocab.id(l).unwrap()).collect();
        }
        ds
    }

    #[test]
    fn one_swap_gives_a_pair_each_way() {
        let ds = tiny_dataset(&[&["red", "v-neck"], &["blue", "v-neck"]]);
        let pairs = make_query_pairs(&ds, &[0, 1]);
        let red = ds.vocab.id("red").unwrap();
        let blue = ds.vocab.id("blue").unwrap();
        assert_eq!(
            pairs,
            vec![
                QueryPair { query: 0, target: 1, added: blue, removed: red },
                QueryPair { query: 1, target: 0, added: red, removed: blue },
            ]
        );
    }

    #[test]
    fn two_differences_give_no_pair() {
        let ds = tiny_dataset(&[&["red", "v-neck"], &["blue", "crew"]]);
        assert!(make_query_pairs(&ds, &[0, 1]).is_empty());
    }

    #[test]
    fn identical_descriptions_give_no_pair() {
        let ds = tiny_dataset(&[&["red", "v-neck"], &["red", "v-neck"]]);
        assert!(make_query_pairs(&ds, &[0, 1]).is_empty());
    }
}
