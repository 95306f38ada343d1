//! Skip-gram with negative sampling over attribute descriptions.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{self, Matrix};
use crate::{Error, Result};

/// Words kept after frequency filtering, ordered by (count desc, label asc).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct W2vVocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: BTreeMap<String, u32>,
}

impl W2vVocab {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }
}

pub fn build_vocab<S: AsRef<str>>(descriptions: &[Vec<S>], min_count: u64) -> Result<W2vVocab> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for d in descriptions {
        for w in d {
            *counts.entry(w.as_ref()).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocab);
    }
    // BTreeMap iteration is label-ascending, so a stable sort on count keeps the tie order
    kept.sort_by_key(|&(_, c)| core::cmp::Reverse(c));
    let words: Vec<String> = kept.iter().map(|(w, _)| w.to_string()).collect();
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
    Ok(W2vVocab { words, counts: kept.iter().map(|&(_, c)| c).collect(), index })
}

/// How far around a word its context extends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Every other word of the description.
    Full,
    /// Words at most this many positions away.
    Radius(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: Window,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate; decays linearly to ~0 over training.
    pub lr: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self { dim: 64, window: Window::Radius(1), negatives: 5, epochs: 15, lr: 0.025, seed: 0 }
    }
}

/// Trained word vectors; row `i` belongs to `vocab.words()[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticEmbeddings {
    pub words: Vec<String>,
    pub vectors: Matrix,
}

impl SemanticEmbeddings {
    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.words.iter().position(|w| w == word).map(|i| self.vectors.row(i))
    }
}

/// Target ("input") and context ("output") vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramModel {
    pub input: Matrix,
    pub output: Matrix,
}

impl SkipGramModel {
    /// word2vec's customary init: small uniform targets, zero contexts.
    pub fn init(vocab_size: usize, dim: usize, rng: &mut impl Rng) -> Self {
        let half = 0.5 / dim as f64;
        let input = Matrix::from_fn(vocab_size, dim, |_, _| rng.random_range(-half..half));
        Self { input, output: Matrix::zeros(vocab_size, dim) }
    }

    /// `-log σ(u_ctx·v_c) - Σ_n log σ(-u_n·v_c)`
    pub fn pair_loss(&self, center: u32, context: u32, negatives: &[u32]) -> f64 {
        let v = self.input.row(center as usize);
        let mut loss = -math::log_sigmoid(math::dot(self.output.row(context as usize), v));
        for &n in negatives {
            loss -= math::log_sigmoid(-math::dot(self.output.row(n as usize), v));
        }
        loss
    }

    /// Accumulates `∂pair_loss` into `grad` (same shapes as `self`).
    pub fn pair_grad(&self, center: u32, context: u32, negatives: &[u32], grad: &mut SkipGramModel) {
        let v = self.input.row(center as usize);
        let mut gv = vec![0.0; v.len()];
        let targets = core::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
        for (word, label) in targets {
            let u = self.output.row(word as usize);
            // d/dz of -[label·log σ(z) + (1-label)·log σ(-z)] = σ(z) - label
            let g = math::sigmoid(math::dot(u, v)) - label;
            math::axpy(g, u, &mut gv);
            math::axpy(g, v, grad.output.row_mut(word as usize));
        }
        math::axpy(1.0, &gv, grad.input.row_mut(center as usize));
    }
}

fn encode<S: AsRef<str>>(descriptions: &[Vec<S>], vocab: &W2vVocab) -> Vec<Vec<u32>> {
    descriptions
        .iter()
        .map(|d| d.iter().filter_map(|w| vocab.id(w.as_ref())).collect())
        .collect()
}

fn context_range(window: Window, pos: usize, len: usize) -> core::ops::Range<usize> {
    match window {
        Window::Full => 0..len,
        Window::Radius(r) => pos.saturating_sub(r)..(pos + r + 1).min(len),
    }
}

fn count_pairs(sentences: &[Vec<u32>], window: Window) -> usize {
    sentences
        .iter()
        .map(|s| (0..s.len()).map(|p| context_range(window, p, s.len()).len().saturating_sub(1)).sum::<usize>())
        .sum()
}

/// Cumulative unigram^0.75 weights for negative sampling.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(vocab: &W2vVocab) -> Self {
        let mut acc = 0.0;
        let cumulative = (0..vocab.len() as u32)
            .map(|i| {
                acc += libm::pow(vocab.count(i) as f64, 0.75);
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> u32 {
        let total = *self.cumulative.last().unwrap();
        let r = rng.random_range(0.0..total);
        self.cumulative.partition_point(|&c| c <= r).min(self.cumulative.len() - 1) as u32
    }
}

/// Trains skip-gram vectors. Deterministic for a fixed config.
pub fn train_skipgram<S: AsRef<str>>(
    descriptions: &[Vec<S>],
    vocab: &W2vVocab,
    cfg: &SkipGramConfig,
) -> Result<SemanticEmbeddings> {
    if cfg.dim < 2 {
        return Err(Error::Config("word vector dim must be at least 2".into()));
    }
    let sentences = encode(descriptions, vocab);
    let total_pairs = count_pairs(&sentences, cfg.window);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = SkipGramModel::init(vocab.len(), cfg.dim, &mut rng);
    if cfg.epochs > 0 && total_pairs == 0 {
        return Err(Error::NoTrainingPairs);
    }

    let noise = NoiseTable::new(vocab);
    let budget = (total_pairs * cfg.epochs) as f64;
    let mut processed = 0usize;
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut negs = Vec::with_capacity(cfg.negatives);
    let mut gv = vec![0.0; cfg.dim];
    let mut v = vec![0.0; cfg.dim];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &si in &order {
            let s = &sentences[si];
            for (pos, &center) in s.iter().enumerate() {
                for cpos in context_range(cfg.window, pos, s.len()) {
                    if cpos == pos {
                        continue;
                    }
                    let context = s[cpos];
                    let lr = cfg.lr * (1.0 - processed as f64 / budget).max(1e-4);
                    processed += 1;

                    negs.clear();
                    for _ in 0..cfg.negatives {
                        let n = noise.sample(&mut rng);
                        if n != context {
                            negs.push(n);
                        }
                    }
                    gv.iter_mut().for_each(|g| *g = 0.0);
                    let targets = core::iter::once((context, 1.0)).chain(negs.iter().map(|&n| (n, 0.0)));
                    v.copy_from_slice(model.input.row(center as usize));
                    for (word, label) in targets {
                        let u = model.output.row(word as usize);
                        let g = math::sigmoid(math::dot(u, &v)) - label;
                        math::axpy(g, u, &mut gv);
                        math::axpy(-lr * g, &v, model.output.row_mut(word as usize));
                    }
                    math::axpy(-lr, &gv, model.input.row_mut(center as usize));
                }
            }
        }
    }
    if !model.input.is_finite() {
        return Err(Error::Divergence { epoch: cfg.epochs });
    }
    Ok(SemanticEmbeddings { words: vocab.words().to_vec(), vectors: model.input })
}

/// Compares the analytic negative-sampling gradient with central finite
/// differences (step `1e-4`) over every parameter, for every (center, context)
/// pair of a toy corpus with a fixed draw of negatives. Returns the largest
/// relative error.
pub fn neg_sample_gradcheck<S: AsRef<str>>(
    toy_corpus: &[Vec<S>],
    dim: usize,
    negatives: usize,
    seed: u64,
) -> Result<f64> {
    let vocab = build_vocab(toy_corpus, 1)?;
    if vocab.len() > 10 {
        return Err(Error::Config("gradient check expects at most 10 words".into()));
    }
    let sentences = encode(toy_corpus, &vocab);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = SkipGramModel::init(vocab.len(), dim, &mut rng);
    // random contexts so the sigmoid terms are away from their symmetric point
    for x in model.output.as_mut_slice() {
        *x = rng.random_range(-0.5..0.5);
    }
    for x in model.input.as_mut_slice() {
        *x = rng.random_range(-0.5..0.5);
    }
    let noise = NoiseTable::new(&vocab);
    let mut terms = Vec::new();
    for s in &sentences {
        for (pos, &center) in s.iter().enumerate() {
            for cpos in context_range(Window::Full, pos, s.len()) {
                if cpos != pos {
                    let negs: Vec<u32> = (0..negatives).map(|_| noise.sample(&mut rng)).collect();
                    terms.push((center, s[cpos], negs));
                }
            }
        }
    }
    if terms.is_empty() {
        return Err(Error::NoTrainingPairs);
    }

    let total = |m: &SkipGramModel| terms.iter().map(|(c, o, n)| m.pair_loss(*c, *o, n)).sum::<f64>();
    let mut grad = SkipGramModel { input: Matrix::zeros(vocab.len(), dim), output: Matrix::zeros(vocab.len(), dim) };
    for (c, o, n) in &terms {
        model.pair_grad(*c, *o, n, &mut grad);
    }

    const STEP: f64 = 1e-4;
    let mut worst: f64 = 0.0;
    for which in 0..2 {
        for idx in 0..vocab.len() * dim {
            let original = if which == 0 { model.input.as_slice()[idx] } else { model.output.as_slice()[idx] };
            let set = |m: &mut SkipGramModel, v: f64| {
                if which == 0 {
                    m.input.as_mut_slice()[idx] = v;
                } else {
                    m.output.as_mut_slice()[idx] = v;
                }
            };
            set(&mut model, original + STEP);
            let plus = total(&model);
            set(&mut model, original - STEP);
            let minus = total(&model);
            set(&mut model, original);
            let numeric = (plus - minus) / (2.0 * STEP);
            let analytic = if which == 0 { grad.input.as_slice()[idx] } else { grad.output.as_slice()[idx] };
            worst = worst.max(math::relative_error(analytic, numeric));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        lines.iter().map(|l| l.split_whitespace().map(String::from).collect()).collect()
    }

    #[test]
    fn min_count_filters_rare_words() {
        let mut lines = vec!["red dress"; 5];
        lines.extend(["blue dress"; 4]);
        let v = build_vocab(&corpus(&lines), 5).unwrap();
        assert_eq!(v.id("blue"), None);
        assert_eq!(v.words(), &["dress".to_string(), "red".to_string()]);
    }

    #[test]
    fn min_count_one_keeps_everything_and_ties_sort_by_label() {
        let v = build_vocab(&corpus(&["b a", "c"]), 1).unwrap();
        assert_eq!(v.words(), &["a".to_string(), "b".to_string(), "c".to_string()]);
    }

    #[test]
    fn all_filtered_is_an_error() {
        assert_eq!(build_vocab(&corpus(&["a b"]), 5), Err(Error::EmptyVocab));
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let c = corpus(&["a b c", "b c"]);
        let v = build_vocab(&c, 1).unwrap();
        let cfg = SkipGramConfig { dim: 8, epochs: 0, seed: 3, ..Default::default() };
        let e = train_skipgram(&c, &v, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(e.vectors, SkipGramModel::init(3, 8, &mut rng).input);
    }

    #[test]
    fn no_pairs_is_an_error() {
        let c = corpus(&["a", "b"]);
        let v = build_vocab(&c, 1).unwrap();
        let cfg = SkipGramConfig { dim: 4, window: Window::Full, ..Default::default() };
        assert_eq!(train_skipgram(&c, &v, &cfg), Err(Error::NoTrainingPairs));
        let c = corpus(&["a b", "b a"]);
        let cfg = SkipGramConfig { dim: 4, window: Window::Radius(0), ..Default::default() };
        assert_eq!(train_skipgram(&c, &v, &cfg), Err(Error::NoTrainingPairs));
    }

    #[test]
    fn vectors_have_requested_dim_and_are_finite() {
        let c = corpus(&["a b c", "b c d", "a d"]);
        let v = build_vocab(&c, 1).unwrap();
        let e = train_skipgram(&c, &v, &SkipGramConfig { epochs: 40, ..Default::default() }).unwrap();
        assert_eq!((e.vectors.rows(), e.vectors.cols()), (4, 64));
        assert!(e.vectors.is_finite());
    }

    #[test]
    fn training_is_deterministic() {
        let c = corpus(&["a b c", "b c d", "a d"]);
        let v = build_vocab(&c, 1).unwrap();
        let cfg = SkipGramConfig { dim: 6, epochs: 5, seed: 11, ..Default::default() };
        assert_eq!(train_skipgram(&c, &v, &cfg).unwrap(), train_skipgram(&c, &v, &cfg).unwrap());
    }

    #[test]
    fn gradcheck_three_word_corpus() {
        let err = neg_sample_gradcheck(&corpus(&["a b c", "c a"]), 4, 2, 5).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn gradient_at_zero_is_half_the_other_vector() {
        // σ(0) = 1/2, so ∂/∂v of -log σ(u·v) at v = 0 is -u/2 and ∂/∂u is 0.
        let model = SkipGramModel {
            input: Matrix::zeros(2, 3),
            output: Matrix::from_vec(2, 3, vec![0.0, 0.0, 0.0, 1.0, -2.0, 4.0]).unwrap(),
        };
        let mut g = SkipGramModel { input: Matrix::zeros(2, 3), output: Matrix::zeros(2, 3) };
        model.pair_grad(0, 1, &[], &mut g);
        assert_eq!(g.input.row(0), &[-0.5, 1.0, -2.0]);
        assert_eq!(g.output.row(1), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn single_positive_pair_matches_hand_expansion() {
        // -log σ(u·v): ∂/∂v = -(1 - σ(u·v)) u, ∂/∂u = -(1 - σ(u·v)) v
        let u = [0.3, -0.7];
        let v = [1.1, 0.4];
        let model = SkipGramModel {
            input: Matrix::from_vec(2, 2, vec![v[0], v[1], 0.0, 0.0]).unwrap(),
            output: Matrix::from_vec(2, 2, vec![0.0, 0.0, u[0], u[1]]).unwrap(),
        };
        let mut g = SkipGramModel { input: Matrix::zeros(2, 2), output: Matrix::zeros(2, 2) };
        model.pair_grad(0, 1, &[], &mut g);
        let s = 1.0 / (1.0 + libm::exp(-(u[0] * v[0] + u[1] * v[1])));
        for d in 0..2 {
            assert!((g.input.get(0, d) + (1.0 - s) * u[d]).abs() < 1e-14);
            assert!((g.output.get(1, d) + (1.0 - s) * v[d]).abs() < 1e-14);
        }
    }
}
