//! Pooled features and attribute activation maps.
//!
//! An image's score for attribute `a` is `Wᵃ · (W_I f)` with `f` the per-channel
//! spatial *sum* of the feature map. Because every step is linear, the score
//! splits exactly over spatial cells; the per-cell terms form the embedded
//! attribute activation map (EAAM). Averaging EAAMs over an attribute's
//! positive training images gives its attribute activation map (AAM).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{Dataset, FeatureMap, Split};
use crate::embedding::EmbeddingModel;
use crate::{math, AttrId, Error, Result};

/// `f_k = Σ_{i,j} q_k(i,j)`
pub fn gap(feature_map: &FeatureMap) -> Vec<f64> {
    let dims = feature_map.dims();
    let mut f = vec![0.0; dims.channels];
    for cell in 0..dims.cells() {
        for (acc, &q) in f.iter_mut().zip(feature_map.cell(cell)) {
            *acc += q as f64;
        }
    }
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// One image.
    Eaam,
    /// Mean over positive training images.
    Aam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeMap {
    pub attribute: AttrId,
    pub kind: MapKind,
    pub height: usize,
    pub width: usize,
    /// Row-major `height × width`.
    pub grid: Vec<f64>,
    /// Number of images averaged (1 for an EAAM).
    pub support: u32,
}

impl AttributeMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.grid[i * self.width + j]
    }

    pub fn total(&self) -> f64 {
        self.grid.iter().sum()
    }

    /// Share of the map's positive mass that falls on `mask` cells.
    pub fn positive_mass_inside(&self, mask: &[bool]) -> f64 {
        let (mut inside, mut all) = (0.0, 0.0);
        for (&v, &on) in self.grid.iter().zip(mask) {
            if v > 0.0 {
                all += v;
                if on {
                    inside += v;
                }
            }
        }
        if all > 0.0 {
            inside / all
        } else {
            0.0
        }
    }
}

/// Per-channel weights `W_Iᵀ Wᵃ`: the EAAM at a cell is their dot product
/// with the cell's activations.
pub fn channel_weights(model: &EmbeddingModel, attr_unit: &[f64]) -> Vec<f64> {
    model.image_proj.matvec_t(attr_unit)
}

fn eaam_grid(feature_map: &FeatureMap, weights: &[f64]) -> Vec<f64> {
    let cells = feature_map.dims().cells();
    (0..cells)
        .map(|cell| feature_map.cell(cell).iter().zip(weights).map(|(&q, w)| q as f64 * w).sum())
        .collect()
}

/// `M(i,j) = Σ_m Wᵃ_m Σ_k W_I[m,k] q_k(i,j)`.
///
/// `attr_unit` is the unit-norm attribute row; the image side stays
/// unnormalized so the cells sum to `Wᵃ · (W_I f)` exactly.
pub fn eaam(feature_map: &FeatureMap, model: &EmbeddingModel, attr_unit: &[f64], attribute: AttrId) -> AttributeMap {
    let dims = feature_map.dims();
    let weights = channel_weights(model, attr_unit);
    AttributeMap {
        attribute,
        kind: MapKind::Eaam,
        height: dims.height,
        width: dims.width,
        grid: eaam_grid(feature_map, &weights),
        support: 1,
    }
}

/// Running elementwise mean.
struct MeanGrid {
    grid: Vec<f64>,
    count: u32,
}

impl MeanGrid {
    fn new(cells: usize) -> Self {
        Self { grid: vec![0.0; cells], count: 0 }
    }

    fn push(&mut self, sample: &[f64]) {
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        for (m, &s) in self.grid.iter_mut().zip(sample) {
            *m += (s - *m) * inv;
        }
    }
}

/// Mean EAAM of `attribute` over training items whose description holds it.
/// Items are visited in ascending id order.
pub fn aam(attribute: AttrId, dataset: &Dataset, model: &EmbeddingModel) -> Result<AttributeMap> {
    let unit = model.attribute_unit(attribute)?;
    let weights = channel_weights(model, &unit);
    let mut mean = MeanGrid::new(dataset.dims.cells());
    for &id in dataset.split(Split::Train) {
        let item = dataset.item(id)?;
        if item.description.contains(&attribute) {
            mean.push(&eaam_grid(&item.feature_map, &weights));
        }
    }
    if mean.count == 0 {
        return Err(Error::EmptySupport(attribute));
    }
    Ok(AttributeMap {
        attribute,
        kind: MapKind::Aam,
        height: dataset.dims.height,
        width: dataset.dims.width,
        grid: mean.grid,
        support: mean.count,
    })
}

/// AAMs for the whole vocabulary; attributes with no positive training item
/// are listed in `skipped`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AamSet {
    pub maps: BTreeMap<AttrId, AttributeMap>,
    pub skipped: Vec<AttrId>,
}

pub fn compute_all_aams(dataset: &Dataset, model: &EmbeddingModel) -> Result<AamSet> {
    let m = dataset.vocab.len();
    if model.vocab_size() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: model.vocab_size() });
    }
    let mut weights = Vec::with_capacity(m);
    for a in 0..m as AttrId {
        weights.push(channel_weights(model, &model.attribute_unit(a)?));
    }
    let cells = dataset.dims.cells();
    let mut means: Vec<MeanGrid> = (0..m).map(|_| MeanGrid::new(cells)).collect();
    let mut train: Vec<_> = dataset.split(Split::Train).to_vec();
    train.sort_unstable();
    for id in train {
        let item = dataset.item(id)?;
        for &a in &item.description {
            means[a as usize].push(&eaam_grid(&item.feature_map, &weights[a as usize]));
        }
    }
    let mut set = AamSet::default();
    for (a, mean) in means.into_iter().enumerate() {
        let a = a as AttrId;
        if mean.count == 0 {
            set.skipped.push(a);
            continue;
        }
        set.maps.insert(
            a,
            AttributeMap {
                attribute: a,
                kind: MapKind::Aam,
                height: dataset.dims.height,
                width: dataset.dims.width,
                grid: mean.grid,
                support: mean.count,
            },
        );
    }
    Ok(set)
}

/// Flattened-map cosine between two attributes' AAMs.
pub fn map_cosine(a: &AttributeMap, b: &AttributeMap) -> f64 {
    math::cosine(&a.grid, &b.grid)
}
