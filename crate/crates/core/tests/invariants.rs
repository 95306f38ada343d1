use conceptlab_core::corpus::{default_concepts, generate_synthetic, Split, SyntheticConfig};
use conceptlab_core::embedding::{contrastive_loss, retrieval_sanity, train_embedding, EmbeddingModel, TrainConfig};
use conceptlab_core::math;
use conceptlab_core::projection::{grid_snap, pca_2d};
use conceptlab_core::retrieval::{baseline_query, concept_query, rank, ConceptIndex, Gallery};
use conceptlab_core::concepts::ConceptAssignment;
use conceptlab_core::subspace::SubspaceModel;
use conceptlab_core::AttrId;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn untrained_model_ranks_near_the_middle() {
    // 100 items with pairwise distinct descriptions
    let descs: Vec<Vec<AttrId>> = (0..100u32).map(|i| vec![i / 10, 10 + i % 10]).collect();
    let ids: Vec<u32> = (0..100).collect();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<Vec<f64>> = (0..100).map(|_| (0..16).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let model = EmbeddingModel::init(16, 8, 20, 0.2, &mut rng);
        let r = retrieval_sanity(&model, &features, &descs, &ids).unwrap();
        for m in [r.text_to_image, r.image_to_text] {
            assert!((35.0..=65.0).contains(&m), "seed {seed}: median rank {m}");
        }
    }
}

#[test]
fn training_reduces_loss_and_is_deterministic() {
    let ds = generate_synthetic(&default_concepts(), &SyntheticConfig { n_items: 300, ..Default::default() }).unwrap();
    let features: Vec<Vec<f64>> = ds.items.iter().map(|i| conceptlab_core::activation::gap(&i.feature_map)).collect();
    let descs: Vec<Vec<AttrId>> = ds.items.iter().map(|i| i.description.clone()).collect();
    let cfg = TrainConfig { epochs: 4, seed: 5, ..Default::default() };
    let (a, log) = train_embedding(&features, &descs, ds.split(Split::Train), 30, &cfg).unwrap();
    let (b, _) = train_embedding(&features, &descs, ds.split(Split::Train), 30, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(log.epoch_loss.last().unwrap() <= &log.epoch_loss[0]);
    assert!(a.is_finite());
}

/// Images and texts on the axes, with fixed off-diagonal scores and a free
/// positive score for pair 0.
fn axis_batch(pos0: f64, off: &[[f64; 3]; 3]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let b = 3;
    let texts: Vec<Vec<f64>> = (0..b).map(|k| (0..2 * b).map(|j| f64::from(u8::from(j == k))).collect()).collect();
    let images = (0..b)
        .map(|i| {
            let mut x = vec![0.0; 2 * b];
            for k in 0..b {
                x[k] = if k == i { if i == 0 { pos0 } else { 0.6 } } else { off[i][k] };
            }
            let used: f64 = x.iter().map(|v| v * v).sum();
            x[b + i] = (1.0 - used).max(0.0).sqrt();
            x
        })
        .collect();
    (images, texts)
}

proptest! {
    #[test]
    fn hinge_is_monotone_in_the_positive_score(
        off in proptest::array::uniform3(proptest::array::uniform3(-0.3f64..0.3)),
        lo in -0.4f64..0.4,
        step in 0.0f64..0.2,
        margin in 0.0f64..0.5,
    ) {
        let (x1, t) = axis_batch(lo, &off);
        let (x2, _) = axis_batch(lo + step, &off);
        let a = contrastive_loss(&x1, &t, margin, |_, _| false).unwrap().loss;
        let b = contrastive_loss(&x2, &t, margin, |_, _| false).unwrap().loss;
        prop_assert!(a >= 0.0 && b >= 0.0);
        prop_assert!(b <= a + 1e-12, "{a} -> {b}");
    }

    #[test]
    fn softmax_is_a_distribution(logits in proptest::collection::vec(-800.0f64..800.0, 1..12)) {
        let p = math::softmax(&logits);
        prop_assert!(p.iter().all(|&v| v >= 0.0 && v.is_finite()));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn subspace_output_is_a_distribution(seed in 0u64..500, scale in 0.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = SubspaceModel::init(0, vec![0, 1, 2, 3], 6, 10, &mut rng);
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-scale..=scale)).collect();
        let p = model.predict(&x);
        prop_assert_eq!(p.len(), 5);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        prop_assert!(model.subspace_feature(&x).iter().all(|&h| h >= 0.0));
    }

    #[test]
    fn ranking_ignores_gallery_scale(seed in 0u64..300, c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<Vec<f64>> = (0..20).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let unit = |s: f64| -> Vec<Vec<f64>> { raw.iter().map(|v| math::normalized(&v.iter().map(|x| x * s).collect::<Vec<_>>()).unwrap()).collect() };
        let ids: Vec<u32> = (0..20).collect();
        let q: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = rank(&q, &Gallery::new(&ids, &unit(1.0)).unwrap(), None).unwrap();
        let b = rank(&q, &Gallery::new(&ids, &unit(c)).unwrap(), None).unwrap();
        prop_assert_eq!(a.iter().map(|r| r.0).collect::<Vec<_>>(), b.iter().map(|r| r.0).collect::<Vec<_>>());
    }
}

#[test]
fn baseline_matches_brute_force_argsort() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let d = 6;
    let model = EmbeddingModel::init(4, d, 5, 0.2, &mut rng);
    let emb: Vec<Vec<f64>> =
        (0..40).map(|_| math::normalized(&(0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>()).unwrap()).collect();
    let ids: Vec<u32> = (0..40).collect();
    let gallery = Gallery::new(&ids, &emb).unwrap();
    for q in 0..5u32 {
        for add in 0..5u32 {
            let r = baseline_query(&emb[q as usize], add, &model, &gallery, None).unwrap();
            let wp = math::normalized(model.attr_embed.row(add as usize)).unwrap();
            let comp: Vec<f64> = emb[q as usize].iter().zip(&wp).map(|(a, b)| a + b).collect();
            let mut expect: Vec<(u32, f64)> = ids.iter().map(|&i| (i, math::cosine(&comp, &emb[i as usize]))).collect();
            expect.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            assert_eq!(r.ranked.iter().map(|x| x.0).collect::<Vec<_>>(), expect.iter().map(|x| x.0).collect::<Vec<_>>());
            for (got, want) in r.ranked.iter().zip(&expect) {
                assert!((got.1 - want.1).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn same_attribute_removed_and_added_ranks_by_image_alone() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = 4;
    let model = EmbeddingModel::init(4, d, 2, 0.2, &mut rng);
    // a subspace whose output always picks attribute 0
    let mut s = SubspaceModel::zeros(0, vec![0, 1], d, 3);
    s.out_b = vec![5.0, 0.0, 0.0];
    let assignment = ConceptAssignment { k: 1, assignment: vec![(0, 0), (1, 0)], centroids: Vec::new(), inertia: 0.0 };
    let index = ConceptIndex::new(assignment, vec![s]);
    let emb: Vec<Vec<f64>> =
        (0..10).map(|_| math::normalized(&(0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>()).unwrap()).collect();
    let ids: Vec<u32> = (0..10).collect();
    let gallery = Gallery::new(&ids, &emb).unwrap();
    let r = concept_query(&emb[0], 0, &model, &index, &gallery, None).unwrap();
    assert_eq!(r.negative, Some(0));
    assert_eq!(r.ranked, rank(&emb[0], &gallery, None).unwrap());
    assert_eq!(r.ranked[0].0, 0);
}

#[test]
fn projection_ignores_input_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pts: Vec<Vec<f64>> = (0..50).map(|i| (0..6).map(|j| rng.random_range(-1.0..1.0) * (1.0 + j as f64) + f64::from(i % 3)).collect()).collect();
    let a = pca_2d(&pts).unwrap();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.reverse();
    order.rotate_left(7);
    let shuffled: Vec<Vec<f64>> = order.iter().map(|&i| pts[i].clone()).collect();
    let b = pca_2d(&shuffled).unwrap();
    for (pos, &i) in order.iter().enumerate() {
        assert!((a[i][0] - b[pos][0]).abs() < 1e-9 && (a[i][1] - b[pos][1]).abs() < 1e-9);
    }
}

#[test]
fn two_dimensional_projection_preserves_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut pts: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0)]).collect();
    let mean = [pts.iter().map(|p| p[0]).sum::<f64>() / 30.0, pts.iter().map(|p| p[1]).sum::<f64>() / 30.0];
    for p in &mut pts {
        p[0] -= mean[0];
        p[1] -= mean[1];
    }
    let xy = pca_2d(&pts).unwrap();
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            let before = math::squared_distance(&pts[i], &pts[j]).sqrt();
            let after = math::squared_distance(&xy[i][..], &xy[j][..]).sqrt();
            assert!((before - after).abs() < 1e-6);
        }
    }
}

#[test]
fn grid_snap_fills_distinct_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts: Vec<[f64; 2]> = (0..200).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let cells = grid_snap(&pts, 12, 12);
    let placed: Vec<_> = cells.iter().flatten().collect();
    assert_eq!(placed.len(), 144);
    let unique: std::collections::BTreeSet<_> = placed.iter().collect();
    assert_eq!(unique.len(), 144);
}
