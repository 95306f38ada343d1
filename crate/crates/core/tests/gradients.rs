//! Analytic gradients against central finite differences on toy sizes.

use conceptlab_core::embedding::{batch_loss, contrastive_loss, EmbeddingModel};
use conceptlab_core::math::{relative_error, Matrix};
use conceptlab_core::subspace::SubspaceModel;
use conceptlab_core::word2vec::neg_sample_gradcheck;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn random_vecs(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// Central difference of `f` at every coordinate of `params`.
fn numeric(params: &mut [f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..params.len())
        .map(|i| {
            let orig = params[i];
            params[i] = orig + H;
            let up = f(params);
            params[i] = orig - H;
            let down = f(params);
            params[i] = orig;
            (up - down) / (2.0 * H)
        })
        .collect()
}

fn max_rel(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic.iter().zip(numeric).map(|(&a, &n)| relative_error(a, n)).fold(0.0, f64::max)
}

fn flat(v: &[Vec<f64>]) -> Vec<f64> {
    v.iter().flatten().copied().collect()
}

fn unflat(p: &[f64], d: usize) -> Vec<Vec<f64>> {
    p.chunks(d).map(<[f64]>::to_vec).collect()
}

#[test]
fn contrastive_loss_wrt_raw_vectors() {
    let (b, d, margin) = (4, 8, 0.2);
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let images = random_vecs(&mut rng, b, d);
        let texts = random_vecs(&mut rng, b, d);
        let out = contrastive_loss(&images, &texts, margin, |_, _| false).unwrap();
        assert!(out.loss > 0.0, "seed {seed}: hinge inactive, nothing to check");

        let mut p = flat(&images);
        let n = numeric(&mut p, |p| contrastive_loss(&unflat(p, d), &texts, margin, |_, _| false).unwrap().loss);
        let err = max_rel(&flat(&out.grad_images), &n);
        assert!(err < TOL, "seed {seed}: image gradient error {err}");

        let mut p = flat(&texts);
        let n = numeric(&mut p, |p| contrastive_loss(&images, &unflat(p, d), margin, |_, _| false).unwrap().loss);
        let err = max_rel(&flat(&out.grad_texts), &n);
        assert!(err < TOL, "seed {seed}: text gradient error {err}");
    }
}

#[test]
fn batch_loss_wrt_model_parameters() {
    let (kf, d, m) = (6, 8, 5);
    let descriptions: [&[u32]; 4] = [&[0, 1], &[2], &[1, 3, 4], &[0, 4]];
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let model = EmbeddingModel {
            image_proj: Matrix::from_fn(d, kf, |_, _| rng.random_range(-1.0..1.0)),
            attr_embed: Matrix::from_fn(m, d, |_, _| rng.random_range(-1.0..1.0)),
            margin: 0.2,
        };
        let feats = random_vecs(&mut rng, 4, kf);
        let frefs: Vec<&[f64]> = feats.iter().map(Vec::as_slice).collect();
        let (_, g) = batch_loss(&model, &frefs, &descriptions).unwrap();

        let mut p = model.image_proj.as_slice().to_vec();
        let n = numeric(&mut p, |p| {
            let mm = EmbeddingModel { image_proj: Matrix::from_vec(d, kf, p.to_vec()).unwrap(), ..model.clone() };
            batch_loss(&mm, &frefs, &descriptions).unwrap().0
        });
        let err = max_rel(g.image_proj.as_slice(), &n);
        assert!(err < TOL, "seed {seed}: W_I error {err}");

        let mut p = model.attr_embed.as_slice().to_vec();
        let n = numeric(&mut p, |p| {
            let mm = EmbeddingModel { attr_embed: Matrix::from_vec(m, d, p.to_vec()).unwrap(), ..model.clone() };
            batch_loss(&mm, &frefs, &descriptions).unwrap().0
        });
        let err = max_rel(g.attr_embed.as_slice(), &n);
        assert!(err < TOL, "seed {seed}: W_T error {err}");
    }
}

#[test]
fn subspace_cross_entropy() {
    let (d, hidden) = (8, 6);
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let model = SubspaceModel::init(0, vec![3, 5, 7], d, hidden, &mut rng);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let label = seed as usize % model.classes();
        let (_, g) = model.loss_grad(&x, label);
        let pre = model.forward(&x).pre;
        assert!(pre.iter().all(|z| z.abs() > 10.0 * H), "seed {seed}: sits on a ReLU kink");

        let loss_with = |edit: &dyn Fn(&mut SubspaceModel)| {
            let mut mm = model.clone();
            edit(&mut mm);
            mm.loss_grad(&x, label).0
        };
        let mut p = model.hidden_w.as_slice().to_vec();
        let n = numeric(&mut p, |p| loss_with(&|mm| mm.hidden_w.as_mut_slice().copy_from_slice(p)));
        assert!(max_rel(g.hidden_w.as_slice(), &n) < TOL, "seed {seed}: hidden weights");
        let mut p = model.hidden_b.clone();
        let n = numeric(&mut p, |p| loss_with(&|mm| mm.hidden_b.copy_from_slice(p)));
        assert!(max_rel(&g.hidden_b, &n) < TOL, "seed {seed}: hidden bias");
        let mut p = model.out_w.as_slice().to_vec();
        let n = numeric(&mut p, |p| loss_with(&|mm| mm.out_w.as_mut_slice().copy_from_slice(p)));
        assert!(max_rel(g.out_w.as_slice(), &n) < TOL, "seed {seed}: output weights");
        let mut p = model.out_b.clone();
        let n = numeric(&mut p, |p| loss_with(&|mm| mm.out_b.copy_from_slice(p)));
        assert!(max_rel(&g.out_b, &n) < TOL, "seed {seed}: output bias");
    }
}

#[test]
fn skipgram_negative_sampling() {
    let corpora: [&[&[&str]]; 3] = [
        &[&["red", "mini", "v-neck"]],
        &[&["a", "b"], &["b", "c", "d"], &["d", "a"]],
        &[&["w1", "w2", "w3", "w4", "w5"], &["w6", "w7", "w8", "w9", "w10"]],
    ];
    for (i, corpus) in corpora.iter().enumerate() {
        let corpus: Vec<Vec<&str>> = corpus.iter().map(|d| d.to_vec()).collect();
        for seed in 0..3 {
            let err = neg_sample_gradcheck(&corpus, 4, 2, seed).unwrap();
            assert!(err < TOL, "corpus {i} seed {seed}: {err}");
        }
    }
}
