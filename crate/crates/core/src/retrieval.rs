//! Attribute-feedback retrieval.
//!
//! Baseline: rank the gallery by cosine with `x_q + w_p`. Concept-aware: first
//! ask the subspace of `w_p`'s concept which of its attributes the query image
//! already shows (`w_n`), then rank by `x_q + w_p - w_n`. When the subspace
//! answers none-of-above the concept-aware query is the baseline query.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::concepts::ConceptAssignment;
use crate::corpus::QueryPair;
use crate::embedding::EmbeddingModel;
use crate::subspace::SubspaceModel;
use crate::{math, AttrId, Error, ItemId, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Baseline,
    ConceptAware,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Baseline, Method::ConceptAware];

    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::ConceptAware => "concept",
        }
    }
}

/// Unit-norm embeddings of the searchable items.
#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    pub ids: Vec<ItemId>,
    pub embeddings: Vec<Vec<f64>>,
}

impl Gallery {
    /// `embeddings` holds every item's unit embedding, indexed by item id.
    pub fn new(ids: &[ItemId], embeddings: &[Vec<f64>]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyGallery);
        }
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            out.push(embeddings.get(id as usize).ok_or(Error::UnknownItem(id))?.clone());
        }
        Ok(Self { ids: ids.to_vec(), embeddings: out })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    /// Descending score; equal scores by ascending id.
    pub ranked: Vec<(ItemId, f64)>,
    pub method: Method,
    /// Attribute removed from the query (concept-aware only).
    pub negative: Option<AttrId>,
    /// Concept-aware query that answered as the baseline.
    pub fallback: bool,
    /// `w_p` had no concept with a trained subspace.
    pub no_concept: bool,
}

/// Ranks `gallery` (minus `exclude`) by cosine against `normalize(composite)`.
pub fn rank(composite: &[f64], gallery: &Gallery, exclude: Option<ItemId>) -> Result<Vec<(ItemId, f64)>> {
    let dir = math::normalized(composite)?;
    let mut out: Vec<(ItemId, f64)> = gallery
        .ids
        .iter()
        .zip(&gallery.embeddings)
        .filter(|(&id, _)| Some(id) != exclude)
        .map(|(&id, g)| (id, math::dot(&dir, g)))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

fn composite(query: &[f64], add: &[f64], remove: Option<&[f64]>) -> Vec<f64> {
    let mut c = query.to_vec();
    math::axpy(1.0, add, &mut c);
    if let Some(r) = remove {
        math::axpy(-1.0, r, &mut c);
    }
    c
}

/// `normalize(x_q + w_p)` against the gallery.
pub fn baseline_query(
    query: &[f64],
    add: AttrId,
    model: &EmbeddingModel,
    gallery: &Gallery,
    exclude: Option<ItemId>,
) -> Result<RankedResult> {
    let wp = model.attribute_unit(add)?;
    Ok(RankedResult {
        ranked: rank(&composite(query, &wp, None), gallery, exclude)?,
        method: Method::Baseline,
        negative: None,
        fallback: false,
        no_concept: false,
    })
}

/// Discovered concepts with their trained subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptIndex {
    pub assignment: ConceptAssignment,
    pub subspaces: Vec<SubspaceModel>,
    by_attr: BTreeMap<AttrId, usize>,
}

impl ConceptIndex {
    pub fn new(assignment: ConceptAssignment, subspaces: Vec<SubspaceModel>) -> Self {
        let mut by_attr = BTreeMap::new();
        for (i, s) in subspaces.iter().enumerate() {
            for &a in &s.attributes {
                by_attr.insert(a, i);
            }
        }
        Self { assignment, subspaces, by_attr }
    }

    /// Subspace covering `attr`, if its concept has one.
    pub fn subspace_for(&self, attr: AttrId) -> Option<&SubspaceModel> {
        self.by_attr.get(&attr).map(|&i| &self.subspaces[i])
    }

    pub fn subspace(&self, concept: u32) -> Option<&SubspaceModel> {
        self.subspaces.iter().find(|s| s.concept == concept)
    }
}

/// Outcome of looking for the attribute `w_p` replaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    /// The most probable attribute of `w_p`'s concept.
    Negative(AttrId),
    NoneOfAbove,
    NoConcept,
}

/// `argmax S^C(x_q)` over the concept of `add`.
pub fn detect_negative(query: &[f64], add: AttrId, index: &ConceptIndex) -> Detection {
    match index.subspace_for(add) {
        None => Detection::NoConcept,
        Some(s) => {
            let best = s.argmax(query);
            if best == s.none_class() {
                Detection::NoneOfAbove
            } else {
                Detection::Negative(s.attributes[best])
            }
        }
    }
}

/// `normalize(x_q + w_p - w_n)` against the gallery, or the baseline ranking
/// when no negative attribute is detected.
pub fn concept_query(
    query: &[f64],
    add: AttrId,
    model: &EmbeddingModel,
    index: &ConceptIndex,
    gallery: &Gallery,
    exclude: Option<ItemId>,
) -> Result<RankedResult> {
    let wp = model.attribute_unit(add)?;
    let detection = detect_negative(query, add, index);
    let Detection::Negative(neg) = detection else {
        let mut r = baseline_query(query, add, model, gallery, exclude)?;
        r.method = Method::ConceptAware;
        r.fallback = true;
        r.no_concept = detection == Detection::NoConcept;
        return Ok(r);
    };
    let wn = model.attribute_unit(neg)?;
    let c = composite(query, &wp, Some(&wn));
    // w_p == w_n cancels exactly; rank on the query image alone
    let c = if neg == add { query.to_vec() } else { c };
    Ok(RankedResult {
        ranked: rank(&c, gallery, exclude)?,
        method: Method::ConceptAware,
        negative: Some(neg),
        fallback: false,
        no_concept: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopKRow {
    pub method: Method,
    pub k: usize,
    pub accuracy: f64,
    pub n_queries: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopKReport {
    pub rows: Vec<TopKRow>,
    /// Queries whose item holds exactly one attribute of `w_p`'s concept.
    pub detection_eligible: usize,
    /// ...of which the detected negative is the removed attribute.
    pub detection_correct: usize,
    /// Concept-aware queries answered by the baseline.
    pub fallbacks: usize,
    /// Gallery size seen by each query (test split minus the query).
    pub gallery_size: usize,
}

impl TopKReport {
    pub fn accuracy(&self, method: Method, k: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.method == method && r.k == k).map(|r| r.accuracy)
    }

    pub fn detection_rate(&self) -> f64 {
        if self.detection_eligible == 0 {
            0.0
        } else {
            self.detection_correct as f64 / self.detection_eligible as f64
        }
    }
}

/// Top-k accuracy of both methods over query pairs, searching `gallery`
/// without the query item. A retrieved item counts as a hit when it is the
/// target or carries the target's exact description.
pub fn evaluate_topk(
    pairs: &[QueryPair],
    embeddings: &[Vec<f64>],
    descriptions: &[Vec<AttrId>],
    model: &EmbeddingModel,
    index: &ConceptIndex,
    gallery: &Gallery,
    ks: &[usize],
) -> Result<TopKReport> {
    if pairs.is_empty() {
        return Err(Error::NoQueryPairs);
    }
    let key = |id: ItemId| {
        let mut d = descriptions[id as usize].clone();
        d.sort_unstable();
        d
    };
    let mut first_hit: BTreeMap<Method, Vec<usize>> = BTreeMap::new();
    let mut report = TopKReport { gallery_size: gallery.len() - 1, ..Default::default() };
    for p in pairs {
        let q = &embeddings[p.query as usize];
        let target = key(p.target);
        let results = [
            baseline_query(q, p.added, model, gallery, Some(p.query))?,
            concept_query(q, p.added, model, index, gallery, Some(p.query))?,
        ];
        for r in &results {
            let pos = r.ranked.iter().position(|&(id, _)| id == p.target || key(id) == target);
            first_hit.entry(r.method).or_default().push(pos.map_or(usize::MAX, |i| i + 1));
        }
        if results[1].fallback {
            report.fallbacks += 1;
        }
        if let Some(s) = index.subspace_for(p.added) {
            let qd = &descriptions[p.query as usize];
            let present: Vec<AttrId> = s.attributes.iter().copied().filter(|a| qd.contains(a)).collect();
            if present.len() == 1 {
                report.detection_eligible += 1;
                if results[1].negative == Some(present[0]) {
                    report.detection_correct += 1;
                }
            }
        }
    }
    for (method, hits) in &first_hit {
        for &k in ks {
            let n = hits.iter().filter(|&&h| h <= k).count();
            report.rows.push(TopKRow { method: *method, k, accuracy: n as f64 / hits.len() as f64, n_queries: hits.len() });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Matrix;
    use alloc::vec;

    fn model() -> EmbeddingModel {
        EmbeddingModel { image_proj: Matrix::identity(3), attr_embed: Matrix::identity(3), margin: 0.2 }
    }

    #[test]
    fn singleton_gallery() {
        let g = Gallery::new(&[0], &[vec![1.0, 0.0, 0.0]]).unwrap();
        let r = baseline_query(&[1.0, 0.0, 0.0], 2, &model(), &g, None).unwrap();
        assert_eq!(r.ranked.len(), 1);
        assert_eq!(r.ranked[0].0, 0);
        assert_eq!(r.negative, None);
    }

    #[test]
    fn ties_break_by_id() {
        let e = vec![vec![0.0, 1.0, 0.0]; 3];
        let g = Gallery::new(&[2, 0, 1], &e).unwrap();
        let r = baseline_query(&[1.0, 0.0, 0.0], 0, &model(), &g, None).unwrap();
        assert_eq!(r.ranked.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn unknown_attribute_is_an_error() {
        let g = Gallery::new(&[0], &[vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(baseline_query(&[1.0, 0.0, 0.0], 9, &model(), &g, None).unwrap_err(), Error::UnknownAttribute(9));
    }

    #[test]
    fn empty_gallery_is_an_error() {
        assert_eq!(Gallery::new(&[], &[]).unwrap_err(), Error::EmptyGallery);
    }
}
