//! Per-concept classifiers on top of the frozen image embedding.
//!
//! Each concept `{a_1..a_n}` gets one ReLU hidden layer and a softmax with
//! `n + 1` outputs; the last output is "none of the above". The hidden
//! activations serve as concept-specific features for browsing.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{project_image, EmbeddingModel};
use crate::math::{self, Matrix};
use crate::{AttrId, ConceptId, Error, ItemId, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceModel {
    pub concept: ConceptId,
    /// Output `i < n` predicts `attributes[i]`; output `n` is none-of-above.
    pub attributes: Vec<AttrId>,
    /// `hidden × D`
    pub hidden_w: Matrix,
    pub hidden_b: Vec<f64>,
    /// `(n + 1) × hidden`
    pub out_w: Matrix,
    pub out_b: Vec<f64>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Where an item falls for a concept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConceptLabel {
    Attribute(usize),
    NoneOfAbove,
    /// Two or more of the concept's attributes at once.
    Ambiguous,
}

impl SubspaceModel {
    pub fn zeros(concept: ConceptId, attributes: Vec<AttrId>, input_dim: usize, hidden: usize) -> Self {
        let classes = attributes.len() + 1;
        Self {
            concept,
            attributes,
            hidden_w: Matrix::zeros(hidden, input_dim),
            hidden_b: vec![0.0; hidden],
            out_w: Matrix::zeros(classes, hidden),
            out_b: vec![0.0; classes],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(concept: ConceptId, attributes: Vec<AttrId>, input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(concept, attributes, input_dim, hidden);
        let a = libm::sqrt(6.0 / (input_dim + hidden) as f64);
        m.hidden_w.as_mut_slice().iter_mut().for_each(|w| *w = rng.random_range(-a..a));
        let classes = m.classes();
        let a = libm::sqrt(6.0 / (hidden + classes) as f64);
        m.out_w.as_mut_slice().iter_mut().for_each(|w| *w = rng.random_range(-a..a));
        m
    }

    pub fn classes(&self) -> usize {
        self.attributes.len() + 1
    }

    pub fn none_class(&self) -> usize {
        self.attributes.len()
    }

    pub fn input_dim(&self) -> usize {
        self.hidden_w.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_w.rows()
    }

    pub fn is_finite(&self) -> bool {
        self.hidden_w.is_finite()
            && self.out_w.is_finite()
            && self.hidden_b.iter().chain(&self.out_b).all(|v| v.is_finite())
    }

    pub fn label_for(&self, description: &[AttrId]) -> ConceptLabel {
        let mut found = None;
        for (i, a) in self.attributes.iter().enumerate() {
            if description.contains(a) {
                if found.is_some() {
                    return ConceptLabel::Ambiguous;
                }
                found = Some(i);
            }
        }
        found.map_or(ConceptLabel::NoneOfAbove, ConceptLabel::Attribute)
    }

    pub fn forward(&self, x: &[f64]) -> Forward {
        let mut pre = self.hidden_w.matvec(x);
        math::axpy(1.0, &self.hidden_b, &mut pre);
        let hidden: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
        let mut logits = self.out_w.matvec(&hidden);
        math::axpy(1.0, &self.out_b, &mut logits);
        Forward { pre, hidden, probs: math::softmax(&logits) }
    }

    /// Softmax output over the concept's attributes plus none-of-above.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).probs
    }

    /// Hidden-layer activations: the concept subspace feature.
    pub fn subspace_feature(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).hidden
    }

    /// Index of the most probable output (lowest index on ties).
    pub fn argmax(&self, x: &[f64]) -> usize {
        let p = self.predict(x);
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        best
    }

    /// Cross-entropy of `label` and its gradient.
    pub fn loss_grad(&self, x: &[f64], label: usize) -> (f64, SubspaceGrad) {
        let fw = self.forward(x);
        let loss = -math::ln(fw.probs[label].max(f64::MIN_POSITIVE));
        let mut dz = fw.probs.clone();
        dz[label] -= 1.0;
        let mut g = SubspaceGrad {
            hidden_w: Matrix::zeros(self.hidden_w.rows(), self.hidden_w.cols()),
            hidden_b: vec![0.0; self.hidden_b.len()],
            out_w: Matrix::zeros(self.out_w.rows(), self.out_w.cols()),
            out_b: dz.clone(),
        };
        g.out_w.add_outer(1.0, &dz, &fw.hidden);
        let dh = self.out_w.matvec_t(&dz);
        let dpre: Vec<f64> = dh.iter().zip(&fw.pre).map(|(&d, &z)| if z > 0.0 { d } else { 0.0 }).collect();
        g.hidden_w.add_outer(1.0, &dpre, x);
        g.hidden_b = dpre;
        (loss, g)
    }

    pub fn apply(&mut self, lr: f64, g: &SubspaceGrad) {
        self.hidden_w.add_scaled(-lr, &g.hidden_w);
        self.out_w.add_scaled(-lr, &g.out_w);
        math::axpy(-lr, &g.hidden_b, &mut self.hidden_b);
        math::axpy(-lr, &g.out_b, &mut self.out_b);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceGrad {
    pub hidden_w: Matrix,
    pub hidden_b: Vec<f64>,
    pub out_w: Matrix,
    pub out_b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceConfig {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    /// Negatives sampled per positive.
    pub neg_ratio: f64,
    pub seed: u64,
}

impl Default for SubspaceConfig {
    fn default() -> Self {
        Self { hidden: 128, lr: 0.1, epochs: 10, neg_ratio: 0.3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubspaceReport {
    pub positives: usize,
    pub negatives: usize,
    /// Items holding two attributes of the concept, left out.
    pub excluded: Vec<ItemId>,
}

/// Unit-norm image embeddings for every item, indexed by item id.
pub fn embed_images(model: &EmbeddingModel, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    features.iter().map(|f| project_image(f, model, true)).collect()
}

/// Trains one concept's classifier with per-example SGD at a fixed rate.
///
/// Positives are training items holding exactly one of `attributes`;
/// negatives (none-of-above) are drawn once from items holding none of them.
pub fn train_subspace(
    concept: ConceptId,
    attributes: &[AttrId],
    embeddings: &[Vec<f64>],
    descriptions: &[Vec<AttrId>],
    train_ids: &[ItemId],
    cfg: &SubspaceConfig,
) -> Result<(SubspaceModel, SubspaceReport)> {
    if attributes.len() < 2 {
        return Err(Error::Config("a concept subspace needs at least two attributes".into()));
    }
    let input_dim = embeddings.first().map_or(0, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = SubspaceModel::init(concept, attributes.to_vec(), input_dim, cfg.hidden, &mut rng);

    let mut report = SubspaceReport::default();
    let mut examples: Vec<(ItemId, usize)> = Vec::new();
    let mut pool = Vec::new();
    for &id in train_ids {
        match model.label_for(&descriptions[id as usize]) {
            ConceptLabel::Attribute(i) => examples.push((id, i)),
            ConceptLabel::NoneOfAbove => pool.push(id),
            ConceptLabel::Ambiguous => report.excluded.push(id),
        }
    }
    if examples.is_empty() {
        return Err(Error::NoPositives(concept));
    }
    report.positives = examples.len();
    let wanted = libm::round(cfg.neg_ratio * examples.len() as f64) as usize;
    pool.shuffle(&mut rng);
    pool.truncate(wanted);
    pool.sort_unstable();
    report.negatives = pool.len();
    let none = model.none_class();
    examples.extend(pool.into_iter().map(|id| (id, none)));

    for epoch in 0..cfg.epochs {
        examples.shuffle(&mut rng);
        for &(id, label) in &examples {
            let (_, g) = model.loss_grad(&embeddings[id as usize], label);
            model.apply(cfg.lr, &g);
        }
        if !model.is_finite() {
            return Err(Error::Divergence { epoch });
        }
    }
    Ok((model, report))
}

/// Fraction of `ids` (excluding ambiguous items) whose argmax matches their
/// concept label.
pub fn accuracy(model: &SubspaceModel, embeddings: &[Vec<f64>], descriptions: &[Vec<AttrId>], ids: &[ItemId]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for &id in ids {
        let want = match model.label_for(&descriptions[id as usize]) {
            ConceptLabel::Attribute(i) => i,
            ConceptLabel::NoneOfAbove => model.none_class(),
            ConceptLabel::Ambiguous => continue,
        };
        total += 1;
        if model.argmax(&embeddings[id as usize]) == want {
            hit += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let m = SubspaceModel::zeros(0, vec![3, 4, 5], 6, 8);
        let p = m.predict(&[0.3, -0.1, 0.9, 0.0, 0.2, 0.4]);
        assert_eq!(p.len(), 4);
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn probabilities_sum_to_one_and_features_are_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = SubspaceModel::init(1, vec![0, 1], 5, 16, &mut rng);
        for _ in 0..50 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = m.predict(&x);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(p.iter().all(|&v| v >= 0.0));
            assert!(m.subspace_feature(&x).iter().all(|&h| h >= 0.0));
            assert_eq!(m.subspace_feature(&x), m.subspace_feature(&x));
        }
    }

    #[test]
    fn labels() {
        let m = SubspaceModel::zeros(0, vec![3, 4], 2, 2);
        assert_eq!(m.label_for(&[1, 4]), ConceptLabel::Attribute(1));
        assert_eq!(m.label_for(&[1, 2]), ConceptLabel::NoneOfAbove);
        assert_eq!(m.label_for(&[3, 4]), ConceptLabel::Ambiguous);
    }

    #[test]
    fn no_positives_is_an_error() {
        let emb = vec![vec![1.0, 0.0]; 3];
        let desc = vec![vec![0], vec![1], vec![0]];
        let r = train_subspace(7, &[5, 6], &emb, &desc, &[0, 1, 2], &SubspaceConfig::default());
        assert_eq!(r.unwrap_err(), Error::NoPositives(7));
    }

    #[test]
    fn ambiguous_items_are_excluded() {
        let emb = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8], vec![0.8, 0.6]];
        let desc = vec![vec![0], vec![1], vec![0, 1], vec![2]];
        let cfg = SubspaceConfig { hidden: 4, epochs: 2, neg_ratio: 1.0, ..Default::default() };
        let (_, report) = train_subspace(0, &[0, 1], &emb, &desc, &[0, 1, 2, 3], &cfg).unwrap();
        assert_eq!(report.excluded, vec![2]);
        assert_eq!((report.positives, report.negatives), (2, 1));
    }
}
