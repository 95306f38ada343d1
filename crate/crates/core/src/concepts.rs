//! Attribute features, k-means concept discovery and clustering scores.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::AamSet;
use crate::math;
use crate::{AttrId, ConceptId, Error, Result};

/// Which representation of an attribute is clustered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureMode {
    /// `[vec(A)/|vec(A)|, E/|E|]`
    Joint,
    SpatialOnly,
    SemanticOnly,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 3] = [FeatureMode::Joint, FeatureMode::SemanticOnly, FeatureMode::SpatialOnly];

    pub fn name(self) -> &'static str {
        match self {
            FeatureMode::Joint => "joint",
            FeatureMode::SpatialOnly => "spatial_only",
            FeatureMode::SemanticOnly => "semantic_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeFeature {
    pub attribute: AttrId,
    pub vector: Vec<f64>,
}

/// Builds one feature per attribute present in both `aams` and `semantic`
/// (ascending attribute id). Each half is scaled to unit norm.
pub fn build_features(
    aams: &AamSet,
    semantic: &BTreeMap<AttrId, Vec<f64>>,
    mode: FeatureMode,
) -> Result<Vec<AttributeFeature>> {
    let mut out = Vec::new();
    for (&attr, map) in &aams.maps {
        let Some(word) = semantic.get(&attr) else { continue };
        let unit = |v: &[f64]| math::normalized(v).map_err(|_| Error::DegenerateFeature(attr));
        let vector = match mode {
            FeatureMode::SpatialOnly => unit(&map.grid)?,
            FeatureMode::SemanticOnly => unit(word)?,
            FeatureMode::Joint => {
                let mut v = unit(&map.grid)?;
                v.extend(unit(word)?);
                v
            }
        };
        out.push(AttributeFeature { attribute: attr, vector });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    /// Cluster of each point.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Total squared distance of points to their centroids.
    pub inertia: f64,
    /// Inertia after each Lloyd iteration.
    pub inertia_trace: Vec<f64>,
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = math::squared_distance(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding.
pub fn kmeans_pp_init(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| math::squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.random_range(0.0..total);
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if r < acc && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(math::squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd iterations from the given centroids until assignments settle.
/// A cluster left empty takes the point farthest from its own centroid.
pub fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> KMeansRun {
    let k = centroids.len();
    let dim = points.first().map_or(0, Vec::len);
    let mut labels = vec![usize::MAX; points.len()];
    let mut trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut dist = Vec::with_capacity(points.len());
        for (p, label) in points.iter().zip(labels.iter_mut()) {
            let (c, d) = nearest(p, &centroids);
            changed |= *label != c;
            *label = c;
            dist.push(d);
        }
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let far = (0..points.len())
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                sizes[labels[i]] -= 1;
                labels[i] = c;
                sizes[c] = 1;
                dist[i] = 0.0;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &l) in points.iter().zip(&labels) {
            math::axpy(1.0, p, &mut sums[l]);
        }
        for (c, sum) in sums.into_iter().enumerate() {
            if sizes[c] > 0 {
                centroids[c] = sum.into_iter().map(|s| s / sizes[c] as f64).collect();
            }
        }
        let inertia = points.iter().zip(&labels).map(|(p, &l)| math::squared_distance(p, &centroids[l])).sum();
        trace.push(inertia);
        if !changed {
            break;
        }
    }
    let inertia = *trace.last().unwrap_or(&0.0);
    KMeansRun { labels, centroids, inertia, inertia_trace: trace }
}

/// Best of `restarts` k-means++ / Lloyd runs by inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<KMeansRun> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansRun> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, kmeans_pp_init(points, k, &mut rng), 300);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

/// Attributes grouped into concepts.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptAssignment {
    pub k: usize,
    /// (attribute, concept), ascending attribute id.
    pub assignment: Vec<(AttrId, ConceptId)>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

impl ConceptAssignment {
    /// Renumbers clusters by first appearance in attribute order so equal
    /// partitions always carry equal ids.
    pub fn from_run(attributes: &[AttrId], run: KMeansRun) -> Self {
        let k = run.centroids.len();
        let mut relabel = vec![usize::MAX; k];
        let mut next = 0;
        for &l in &run.labels {
            if relabel[l] == usize::MAX {
                relabel[l] = next;
                next += 1;
            }
        }
        for r in relabel.iter_mut().filter(|r| **r == usize::MAX) {
            *r = next;
            next += 1;
        }
        let mut centroids = vec![Vec::new(); k];
        for (old, c) in run.centroids.into_iter().enumerate() {
            centroids[relabel[old]] = c;
        }
        let assignment = attributes.iter().zip(&run.labels).map(|(&a, &l)| (a, relabel[l] as ConceptId)).collect();
        Self { k, assignment, centroids, inertia: run.inertia }
    }

    pub fn concept_of(&self, attr: AttrId) -> Option<ConceptId> {
        self.assignment.binary_search_by_key(&attr, |&(a, _)| a).ok().map(|i| self.assignment[i].1)
    }

    /// Attributes of one concept, ascending.
    pub fn members(&self, concept: ConceptId) -> Vec<AttrId> {
        self.assignment.iter().filter(|&&(_, c)| c == concept).map(|&(a, _)| a).collect()
    }

    pub fn concepts(&self) -> impl Iterator<Item = ConceptId> {
        0..self.k as ConceptId
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterScores {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts.filter(|&c| c > 0).map(|c| {
        let p = c as f64 / n;
        -p * math::ln(p)
    }).sum()
}

/// Homogeneity, completeness and V-measure of `clusters` against `classes`
/// (natural-log entropies).
pub fn cluster_scores(clusters: &[ConceptId], classes: &[ConceptId]) -> Result<ClusterScores> {
    if clusters.is_empty() {
        return Err(Error::EmptyAssignment);
    }
    if clusters.len() != classes.len() {
        return Err(Error::DimensionMismatch { expected: clusters.len(), actual: classes.len() });
    }
    let n = clusters.len() as f64;
    let mut joint: BTreeMap<(ConceptId, ConceptId), usize> = BTreeMap::new();
    let mut by_cluster: BTreeMap<ConceptId, usize> = BTreeMap::new();
    let mut by_class: BTreeMap<ConceptId, usize> = BTreeMap::new();
    for (&k, &c) in clusters.iter().zip(classes) {
        *joint.entry((k, c)).or_default() += 1;
        *by_cluster.entry(k).or_default() += 1;
        *by_class.entry(c).or_default() += 1;
    }
    let h_class = entropy(by_class.values().copied(), n);
    let h_cluster = entropy(by_cluster.values().copied(), n);
    // H(class|cluster) = -Σ p(k,c) ln(n_kc / n_k), and symmetrically
    let mut h_class_given_cluster = 0.0;
    let mut h_cluster_given_class = 0.0;
    for (&(k, c), &nkc) in &joint {
        let p = nkc as f64 / n;
        h_class_given_cluster -= p * math::ln(nkc as f64 / by_cluster[&k] as f64);
        h_cluster_given_class -= p * math::ln(nkc as f64 / by_class[&c] as f64);
    }
    let homogeneity = if h_class == 0.0 { 1.0 } else { 1.0 - h_class_given_cluster / h_class };
    let completeness = if h_cluster == 0.0 { 1.0 } else { 1.0 - h_cluster_given_class / h_cluster };
    let v_measure = if homogeneity + completeness > 0.0 {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    } else {
        0.0
    };
    Ok(ClusterScores { homogeneity, completeness, v_measure })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryConfig {
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    pub mode: FeatureMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discovery {
    pub assignment: ConceptAssignment,
    /// Present when ground truth covers every clustered attribute.
    pub scores: Option<ClusterScores>,
}

/// Features → k-means → scores.
pub fn discover(
    aams: &AamSet,
    semantic: &BTreeMap<AttrId, Vec<f64>>,
    ground_truth: Option<&[ConceptId]>,
    cfg: &DiscoveryConfig,
) -> Result<Discovery> {
    let features = build_features(aams, semantic, cfg.mode)?;
    let points: Vec<Vec<f64>> = features.iter().map(|f| f.vector.clone()).collect();
    let attributes: Vec<AttrId> = features.iter().map(|f| f.attribute).collect();
    let run = kmeans(&points, cfg.k, cfg.seed, cfg.restarts)?;
    let assignment = ConceptAssignment::from_run(&attributes, run);
    let scores = match ground_truth {
        Some(gt) => {
            let truth: Option<Vec<ConceptId>> = attributes.iter().map(|&a| gt.get(a as usize).copied()).collect();
            match truth {
                Some(truth) => {
                    let pred: Vec<ConceptId> = assignment.assignment.iter().map(|&(_, c)| c).collect();
                    Some(cluster_scores(&pred, &truth)?)
                }
                None => None,
            }
        }
        None => None,
    };
    Ok(Discovery { assignment, scores })
}
