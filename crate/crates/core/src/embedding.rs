//! Joint visual-semantic embedding trained with a bidirectional hinge loss.
//!
//! Images enter as summed-pooling features `f` and are projected by
//! `x = W_I f`; descriptions are the mean of their attributes' rows of `W_T`.
//! Similarity is the cosine of the two. Gradients are derived by hand through
//! the hinge, the cosine and both normalizations.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{self, Matrix};
use crate::{AttrId, Error, ItemId, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    /// `D × K'`: row `m` maps pooled features to embedding coordinate `m`.
    pub image_proj: Matrix,
    /// `M × D`: row `a` is attribute `a`'s embedding.
    pub attr_embed: Matrix,
    pub margin: f64,
}

impl EmbeddingModel {
    pub fn init(feature_dim: usize, dim: usize, vocab_size: usize, margin: f64, rng: &mut impl Rng) -> Self {
        let image_proj = Matrix::from_fn(dim, feature_dim, |_, _| rng.random_range(-0.05..0.05));
        let attr_embed = Matrix::from_fn(vocab_size, dim, |_, _| rng.random_range(-0.05..0.05));
        Self { image_proj, attr_embed, margin }
    }

    pub fn dim(&self) -> usize {
        self.image_proj.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.image_proj.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.attr_embed.rows()
    }

    /// Unit-norm row of `W_T` for one attribute.
    pub fn attribute_unit(&self, attr: AttrId) -> Result<Vec<f64>> {
        if attr as usize >= self.vocab_size() {
            return Err(Error::UnknownAttribute(attr));
        }
        math::normalized(self.attr_embed.row(attr as usize))
    }

    pub fn is_finite(&self) -> bool {
        self.image_proj.is_finite() && self.attr_embed.is_finite() && self.margin.is_finite()
    }
}

fn check_description(description: &[AttrId], vocab_size: usize) -> Result<()> {
    if description.is_empty() {
        return Err(Error::EmptyDescription);
    }
    let mut seen = BTreeSet::new();
    for &a in description {
        if a as usize >= vocab_size {
            return Err(Error::UnknownAttribute(a));
        }
        if !seen.insert(a) {
            return Err(Error::DuplicateAttribute(a));
        }
    }
    Ok(())
}

fn mean_rows(description: &[AttrId], attr_embed: &Matrix) -> Vec<f64> {
    let mut v = vec![0.0; attr_embed.cols()];
    let scale = 1.0 / description.len() as f64;
    for &a in description {
        math::axpy(scale, attr_embed.row(a as usize), &mut v);
    }
    v
}

/// Bag-of-words description vector: mean of the attribute rows, unit norm.
pub fn encode_description(description: &[AttrId], model: &EmbeddingModel) -> Result<Vec<f64>> {
    check_description(description, model.vocab_size())?;
    math::normalized(&mean_rows(description, &model.attr_embed))
}

/// `x = W_I f`, optionally scaled to unit norm.
pub fn project_image(feature: &[f64], model: &EmbeddingModel, normalize: bool) -> Result<Vec<f64>> {
    if feature.len() != model.feature_dim() {
        return Err(Error::DimensionMismatch { expected: model.feature_dim(), actual: feature.len() });
    }
    let x = model.image_proj.matvec(feature);
    if normalize {
        math::normalized(&x)
    } else {
        Ok(x)
    }
}

/// Loss value and gradients with respect to the unnormalized image and
/// description vectors of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct HingeOutput {
    pub loss: f64,
    pub grad_images: Vec<Vec<f64>>,
    pub grad_texts: Vec<Vec<f64>>,
}

/// Bidirectional hinge over in-batch negatives.
///
/// For each matching pair `i` and each other member `k` not flagged by
/// `same(i, k)`:
/// `max(0, m - s(x_i, v_i) + s(x_i, v_k)) + max(0, m - s(x_i, v_i) + s(x_k, v_i))`,
/// summed and divided by the batch size. `s` is the cosine.
pub fn contrastive_loss(
    images: &[Vec<f64>],
    texts: &[Vec<f64>],
    margin: f64,
    same: impl Fn(usize, usize) -> bool,
) -> Result<HingeOutput> {
    let b = images.len();
    if texts.len() != b {
        return Err(Error::DimensionMismatch { expected: b, actual: texts.len() });
    }
    if b < 2 {
        return Err(Error::BatchTooSmall(b));
    }
    let xs: Vec<Vec<f64>> = images.iter().map(|x| math::normalized(x)).collect::<Result<_>>()?;
    let vs: Vec<Vec<f64>> = texts.iter().map(|v| math::normalized(v)).collect::<Result<_>>()?;
    let score = |i: usize, j: usize| math::dot(&xs[i], &vs[j]);

    // coef[i][j] = ∂L/∂s(x_i, v_j)
    let mut coef = vec![vec![0.0; b]; b];
    let mut loss = 0.0;
    let w = 1.0 / b as f64;
    for i in 0..b {
        let pos = score(i, i);
        for k in 0..b {
            if k == i || same(i, k) {
                continue;
            }
            let h1 = margin - pos + score(i, k);
            if h1 > 0.0 {
                loss += h1;
                coef[i][i] -= w;
                coef[i][k] += w;
            }
            let h2 = margin - pos + score(k, i);
            if h2 > 0.0 {
                loss += h2;
                coef[i][i] -= w;
                coef[k][i] += w;
            }
        }
    }
    loss *= w;

    let dim = xs[0].len();
    let mut gx_hat = vec![vec![0.0; dim]; b];
    let mut gv_hat = vec![vec![0.0; dim]; b];
    for i in 0..b {
        for j in 0..b {
            let c = coef[i][j];
            if c != 0.0 {
                math::axpy(c, &vs[j], &mut gx_hat[i]);
                math::axpy(c, &xs[i], &mut gv_hat[j]);
            }
        }
    }
    // through u = z/|z|: ∂L/∂z = (g - u (u·g)) / |z|
    let unnormalize = |g: &mut Vec<f64>, unit: &[f64], raw: &[f64]| {
        let proj = math::dot(unit, g);
        let n = math::norm(raw);
        for (gi, ui) in g.iter_mut().zip(unit) {
            *gi = (*gi - ui * proj) / n;
        }
    };
    for i in 0..b {
        unnormalize(&mut gx_hat[i], &xs[i], &images[i]);
        unnormalize(&mut gv_hat[i], &vs[i], &texts[i]);
    }
    Ok(HingeOutput { loss, grad_images: gx_hat, grad_texts: gv_hat })
}

/// Gradients with respect to both parameter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrad {
    pub image_proj: Matrix,
    pub attr_embed: Matrix,
}

/// Batch loss and parameter gradients. Members with identical descriptions
/// are not treated as each other's negatives.
pub fn batch_loss(model: &EmbeddingModel, features: &[&[f64]], descriptions: &[&[AttrId]]) -> Result<(f64, ModelGrad)> {
    let mut images = Vec::with_capacity(features.len());
    for f in features {
        images.push(project_image(f, model, false)?);
    }
    let mut texts = Vec::with_capacity(descriptions.len());
    let mut keys = Vec::with_capacity(descriptions.len());
    for d in descriptions {
        check_description(d, model.vocab_size())?;
        texts.push(mean_rows(d, &model.attr_embed));
        let mut key = d.to_vec();
        key.sort_unstable();
        keys.push(key);
    }
    let out = contrastive_loss(&images, &texts, model.margin, |i, k| keys[i] == keys[k])?;

    let mut grad = ModelGrad {
        image_proj: Matrix::zeros(model.image_proj.rows(), model.image_proj.cols()),
        attr_embed: Matrix::zeros(model.attr_embed.rows(), model.attr_embed.cols()),
    };
    for (gx, f) in out.grad_images.iter().zip(features) {
        grad.image_proj.add_outer(1.0, gx, f);
    }
    for (gv, d) in out.grad_texts.iter().zip(descriptions) {
        let scale = 1.0 / d.len() as f64;
        for &a in d.iter() {
            math::axpy(scale, gv, grad.attr_embed.row_mut(a as usize));
        }
    }
    Ok((out.loss, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Embedding dimension `D`.
    pub dim: usize,
    pub lr: f64,
    /// The learning rate is divided by this every `decay_every` epochs.
    pub lr_decay: f64,
    pub decay_every: usize,
    pub batch_size: usize,
    pub margin: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { dim: 64, lr: 0.05, lr_decay: 2.0, decay_every: 8, batch_size: 32, margin: 0.2, epochs: 30, seed: 0 }
    }
}

impl TrainConfig {
    /// Learning rate used during (0-based) `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr / libm::pow(self.lr_decay, (epoch / self.decay_every) as f64)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.dim > 0
            && self.lr > 0.0
            && self.lr_decay > 0.0
            && self.decay_every > 0
            && self.batch_size >= 2
            && self.margin > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("embedding hyperparameters must be positive (batch size >= 2)".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    /// Mean batch loss per epoch, measured before each batch's update.
    pub epoch_loss: Vec<f64>,
}

/// SGD over shuffled mini-batches of the given training items.
///
/// `features[id]` is the pooled feature of item `id`; `descriptions[id]` its
/// attribute list. Batches smaller than two at the end of an epoch are skipped.
pub fn train_embedding(
    features: &[Vec<f64>],
    descriptions: &[Vec<AttrId>],
    train_ids: &[ItemId],
    vocab_size: usize,
    cfg: &TrainConfig,
) -> Result<(EmbeddingModel, TrainLog)> {
    cfg.validate()?;
    let feature_dim = features.first().map_or(0, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = EmbeddingModel::init(feature_dim, cfg.dim, vocab_size, cfg.margin, &mut rng);
    let mut log = TrainLog::default();
    let mut order: Vec<ItemId> = train_ids.to_vec();
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let feats: Vec<&[f64]> = chunk.iter().map(|&id| features[id as usize].as_slice()).collect();
            let descs: Vec<&[AttrId]> = chunk.iter().map(|&id| descriptions[id as usize].as_slice()).collect();
            let (loss, grad) = batch_loss(&model, &feats, &descs)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            model.image_proj.add_scaled(-lr, &grad.image_proj);
            model.attr_embed.add_scaled(-lr, &grad.attr_embed);
            total += loss;
            batches += 1;
        }
        if !model.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        log.epoch_loss.push(if batches > 0 { total / batches as f64 } else { 0.0 });
    }
    Ok((model, log))
}

/// Median ranks of the correct match in both retrieval directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianRanks {
    pub text_to_image: f64,
    pub image_to_text: f64,
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Cosine ranking of each item's own description among all descriptions of
/// `ids` (and vice versa). Any candidate with the same description as the
/// query counts as correct; rank 1 is best.
pub fn retrieval_sanity(
    model: &EmbeddingModel,
    features: &[Vec<f64>],
    descriptions: &[Vec<AttrId>],
    ids: &[ItemId],
) -> Result<MedianRanks> {
    let mut xs = Vec::with_capacity(ids.len());
    let mut vs = Vec::with_capacity(ids.len());
    let mut keys = Vec::with_capacity(ids.len());
    for &id in ids {
        xs.push(project_image(&features[id as usize], model, true)?);
        vs.push(encode_description(&descriptions[id as usize], model)?);
        let mut k = descriptions[id as usize].clone();
        k.sort_unstable();
        keys.push(k);
    }
    let n = ids.len();
    let rank = |score: &dyn Fn(usize) -> f64, i: usize| {
        let best = (0..n).filter(|&j| keys[j] == keys[i]).map(score).fold(f64::NEG_INFINITY, f64::max);
        1 + (0..n).filter(|&j| keys[j] != keys[i] && score(j) > best).count()
    };
    let i2t: Vec<usize> = (0..n).map(|i| rank(&|j| math::dot(&xs[i], &vs[j]), i)).collect();
    let t2i: Vec<usize> = (0..n).map(|i| rank(&|j| math::dot(&xs[j], &vs[i]), i)).collect();
    Ok(MedianRanks { text_to_image: median(t2i), image_to_text: median(i2t) })
}

/// Mean cosine of matching (image, description) pairs and of non-matching
/// pairs (different descriptions) over `ids`.
pub fn similarity_separation(
    model: &EmbeddingModel,
    features: &[Vec<f64>],
    descriptions: &[Vec<AttrId>],
    ids: &[ItemId],
) -> Result<(f64, f64)> {
    let mut xs = Vec::with_capacity(ids.len());
    let mut vs = Vec::with_capacity(ids.len());
    let mut keys = Vec::with_capacity(ids.len());
    for &id in ids {
        xs.push(project_image(&features[id as usize], model, true)?);
        vs.push(encode_description(&descriptions[id as usize], model)?);
        let mut k = descriptions[id as usize].clone();
        k.sort_unstable();
        keys.push(k);
    }
    let (mut pos, mut np, mut neg, mut nn) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..ids.len() {
        for j in 0..ids.len() {
            let s = math::dot(&xs[i], &vs[j]);
            if i == j {
                pos += s;
                np += 1;
            } else if keys[i] != keys[j] {
                neg += s;
                nn += 1;
            }
        }
    }
    Ok((pos / np.max(1) as f64, neg / nn.max(1) as f64))
}
