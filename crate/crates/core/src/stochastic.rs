//! Stochastic embeddings into dominating tree metrics: a hierarchical
//! random-decomposition construction for arbitrary finite metrics and the
//! exact edge-deletion embedding for cycles.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::metric::{shortest_path_metric, MetricSpace};
use crate::rng::{derive_seed, rng_from};
use crate::tree::{TreeError, WeightedTree};
use crate::DEFAULT_TOL;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("point map is not injective: {0} and {1} share image {2}")]
    NotInjective(usize, usize, usize),
    #[error("point map length {0} does not match ground size {1}")]
    SizeMismatch(usize, usize),
    #[error("point {0} maps outside the tree (|T|={1})")]
    ImageOutOfRange(usize, usize),
    #[error("domination fails on pair ({u},{v}): tree {tree_dist} < ground {ground_dist}")]
    DominationFailure { u: usize, v: usize, tree_dist: f64, ground_dist: f64 },
    #[error("component probabilities sum to {0}, expected 1")]
    BadProbabilities(f64),
    #[error("stochastic embedding needs at least one component")]
    NoComponents,
    #[error("probability {0} outside (0,1]")]
    BadProbability(f64),
    #[error("cycle embedding requires n >= 3, got {0}")]
    CycleTooSmall(usize),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// One dominating tree image of a ground space: every tree distance between
/// images is at least the ground distance (checked on construction).
#[derive(Debug, Clone)]
pub struct TreeEmbedding {
    tree: WeightedTree,
    point_map: Vec<usize>,
}

impl TreeEmbedding {
    pub fn new(
        tree: WeightedTree,
        point_map: Vec<usize>,
        ground: &MetricSpace,
    ) -> Result<Self, EmbeddingError> {
        let n = ground.len();
        if point_map.len() != n {
            return Err(EmbeddingError::SizeMismatch(point_map.len(), n));
        }
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        for (p, &img) in point_map.iter().enumerate() {
            if img >= tree.len() {
                return Err(EmbeddingError::ImageOutOfRange(p, tree.len()));
            }
            if let Some(&q) = seen.get(&img) {
                return Err(EmbeddingError::NotInjective(q, p, img));
            }
            seen.insert(img, p);
        }
        let emb = TreeEmbedding { tree, point_map };
        if let Some(v) = emb.domination_violation(ground) {
            return Err(v);
        }
        Ok(emb)
    }

    pub fn tree(&self) -> &WeightedTree {
        &self.tree
    }

    pub fn map_point(&self, p: usize) -> usize {
        self.point_map[p]
    }

    /// Tree distance between the images of two ground points.
    pub fn image_distance(&self, u: usize, v: usize) -> f64 {
        self.tree.distance(self.point_map[u], self.point_map[v])
    }

    fn domination_violation(&self, ground: &MetricSpace) -> Option<EmbeddingError> {
        let n = ground.len();
        for u in 0..n {
            for v in (u + 1)..n {
                let ground_dist = ground.dist(u, v);
                let tree_dist = self.image_distance(u, v);
                if tree_dist + DEFAULT_TOL * ground_dist.max(1.0) < ground_dist {
                    return Some(EmbeddingError::DominationFailure {
                        u,
                        v,
                        tree_dist,
                        ground_dist,
                    });
                }
            }
        }
        None
    }
}

/// Finite distribution over dominating tree embeddings.
#[derive(Debug, Clone)]
pub struct StochasticEmbedding {
    components: Vec<(f64, TreeEmbedding)>,
}

impl StochasticEmbedding {
    pub fn new(components: Vec<(f64, TreeEmbedding)>) -> Result<Self, EmbeddingError> {
        if components.is_empty() {
            return Err(EmbeddingError::NoComponents);
        }
        let mut total = 0.0;
        for &(p, _) in &components {
            if !(p > 0.0 && p <= 1.0) {
                return Err(EmbeddingError::BadProbability(p));
            }
            total += p;
        }
        if (total - 1.0).abs() > DEFAULT_TOL {
            return Err(EmbeddingError::BadProbabilities(total));
        }
        Ok(StochasticEmbedding { components })
    }

    pub fn components(&self) -> &[(f64, TreeEmbedding)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Expected image distance Σ pᵢ dᵢ(fᵢ(u), fᵢ(v)).
    pub fn expected_distance(&self, u: usize, v: usize) -> f64 {
        self.components.iter().map(|(p, e)| p * e.image_distance(u, v)).sum()
    }
}

/// One draw of the hierarchical random decomposition: a shared random
/// permutation and a radius scale β ∈ [1,2) with density 1/(β ln 2); level i
/// assigns each point of a parent cluster to the first permutation entry
/// within distance β·2^{i−1}. Cluster nodes form the tree, singleton
/// level-0 clusters are the leaves, and the edge from a level-i node to its
/// parent weighs 2^{i+1} (rescaled back to input units).
pub fn frt_sample(m: &MetricSpace, seed: u64) -> Result<TreeEmbedding, EmbeddingError> {
    let n = m.len();
    if n == 1 {
        let tree = WeightedTree::new(0, vec![0], vec![0.0])?;
        return TreeEmbedding::new(tree, vec![0], m);
    }
    let scale = m
        .min_positive_distance()
        .expect("metric with n >= 2 has a positive distance");
    let diam = m.diameter() / scale;
    let top_level = diam.log2().ceil() as i32;

    let mut rng = rng_from(seed);
    let beta = 2f64.powf(rng.gen::<f64>());
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    // root cluster holds everything one level above the top partition
    let mut parent = vec![0usize];
    let mut weight = vec![0.0f64];
    let mut current: Vec<(Vec<usize>, usize)> = vec![((0..n).collect(), 0)];

    for level in (0..=top_level).rev() {
        let radius = beta * 2f64.powi(level - 1);
        let edge_weight = 2f64.powi(level + 1) * scale;
        let mut next = Vec::new();
        for (cluster, node) in current {
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &p in &cluster {
                let rank = order
                    .iter()
                    .position(|&c| m.dist(c, p) / scale <= radius)
                    .expect("every point is within radius of itself");
                groups.entry(rank).or_default().push(p);
            }
            for (_rank, points) in groups {
                let child = parent.len();
                parent.push(node);
                weight.push(edge_weight);
                next.push((points, child));
            }
        }
        current = next;
    }

    let mut point_map = vec![usize::MAX; n];
    for (cluster, node) in current {
        debug_assert_eq!(cluster.len(), 1, "level-0 clusters are singletons");
        point_map[cluster[0]] = node;
    }
    let tree = WeightedTree::new(0, parent, weight)?;
    TreeEmbedding::new(tree, point_map, m)
}

/// k independent draws, each with probability 1/k. Per-sample seeds are
/// derived from (seed, index), so the ensemble is independent of
/// evaluation order.
pub fn frt_ensemble(
    m: &MetricSpace,
    k: usize,
    seed: u64,
) -> Result<StochasticEmbedding, EmbeddingError> {
    assert!(k >= 1, "ensemble needs at least one sample");
    let p = 1.0 / k as f64;
    let mut components = Vec::with_capacity(k);
    for i in 0..k {
        components.push((p, frt_sample(m, derive_seed(seed, i as u64))?));
    }
    StochasticEmbedding::new(components)
}

/// Deleting each cycle edge with probability 1/n embeds the n-cycle into
/// unit paths: component j removes the edge between j and j+1, the point
/// map is the identity, and every component dominates.
pub fn karp_cycle_embedding(n: usize) -> Result<StochasticEmbedding, EmbeddingError> {
    if n < 3 {
        return Err(EmbeddingError::CycleTooSmall(n));
    }
    let ground = shortest_path_metric(
        &crate::graphs::cycle(n).expect("n >= 3 builds a cycle"),
    );
    let p = 1.0 / n as f64;
    let mut components = Vec::with_capacity(n);
    for deleted in 0..n {
        // path order after deleting edge (deleted, deleted+1)
        let mut parent = vec![0usize; n];
        let mut weight = vec![0.0f64; n];
        let root = (deleted + 1) % n;
        parent[root] = root;
        let mut prev = root;
        for step in 1..n {
            let v = (deleted + 1 + step) % n;
            parent[v] = prev;
            weight[v] = 1.0;
            prev = v;
        }
        let tree = WeightedTree::new(root, parent, weight)?;
        components.push((p, TreeEmbedding::new(tree, (0..n).collect(), &ground)?));
    }
    StochasticEmbedding::new(components)
}

/// A named failure of the per-component domination requirement.
#[derive(Debug, Clone, Serialize)]
pub struct DominationViolation {
    pub component: usize,
    pub u: usize,
    pub v: usize,
    pub deficit: f64,
}

/// Re-checks domination on every component and pair; empty iff Eq.-(4)-style
/// domination holds throughout.
pub fn verify_domination(se: &StochasticEmbedding, m: &MetricSpace) -> Vec<DominationViolation> {
    let mut out = Vec::new();
    let n = m.len();
    for (idx, (_, emb)) in se.components().iter().enumerate() {
        for u in 0..n {
            for v in (u + 1)..n {
                let ground = m.dist(u, v);
                let tree = emb.image_distance(u, v);
                if tree + DEFAULT_TOL * ground.max(1.0) < ground {
                    out.push(DominationViolation { component: idx, u, v, deficit: ground - tree });
                }
            }
        }
    }
    out
}

/// The smallest D for which the averaged upper bound holds on this
/// instance: max over pairs of Σ pᵢ dᵢ / d_X, with the attaining pair.
pub fn expected_stretch(se: &StochasticEmbedding, m: &MetricSpace) -> (f64, (usize, usize)) {
    let n = m.len();
    let mut best = 0.0f64;
    let mut witness = (0, 0);
    for u in 0..n {
        for v in (u + 1)..n {
            let ground = m.dist(u, v);
            if ground <= 0.0 {
                continue;
            }
            let stretch = se.expected_distance(u, v) / ground;
            if stretch > best {
                best = stretch;
                witness = (u, v);
            }
        }
    }
    (best, witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs;

    #[test]
    fn single_point_and_two_point_domination() {
        let one = MetricSpace::from_table(vec![vec![0.0]]).unwrap();
        let e = frt_sample(&one, 3).unwrap();
        assert_eq!(e.tree().len(), 1);

        let two = MetricSpace::from_table(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        for seed in 0..50 {
            let e = frt_sample(&two, seed).unwrap();
            assert!(e.image_distance(0, 1) >= 1.0);
        }
    }

    #[test]
    fn frt_leaves_are_distinct_and_separated() {
        let m = shortest_path_metric(&graphs::cycle(8).unwrap());
        let e = frt_sample(&m, 12).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for p in 0..8 {
            assert!(seen.insert(e.map_point(p)));
        }
        for u in 0..8 {
            for v in (u + 1)..8 {
                assert!(e.image_distance(u, v) >= 4.0 - 1e-12);
            }
        }
    }

    #[test]
    fn frt_is_deterministic_per_seed() {
        let m = shortest_path_metric(&graphs::grid(3, 2).unwrap());
        let a = frt_sample(&m, 77).unwrap();
        let b = frt_sample(&m, 77).unwrap();
        for u in 0..9 {
            for v in 0..9 {
                assert_eq!(a.image_distance(u, v).to_bits(), b.image_distance(u, v).to_bits());
            }
        }
    }

    #[test]
    fn ensemble_probabilities_sum_to_one() {
        let m = shortest_path_metric(&graphs::cycle(4).unwrap());
        let se = frt_ensemble(&m, 7, 5).unwrap();
        let total: f64 = se.components().iter().map(|(p, _)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(verify_domination(&se, &m).is_empty());
    }

    #[test]
    fn two_point_expected_stretch_is_mean() {
        let two = MetricSpace::from_table(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let se = frt_ensemble(&two, 5, 9).unwrap();
        let mean: f64 =
            se.components().iter().map(|(p, e)| p * e.image_distance(0, 1)).sum();
        let (d, _) = expected_stretch(&se, &two);
        assert!((d - mean).abs() < 1e-12);
    }

    #[test]
    fn karp_components_and_stretch() {
        let se = karp_cycle_embedding(4).unwrap();
        assert_eq!(se.len(), 4);
        let m = shortest_path_metric(&graphs::cycle(4).unwrap());
        assert!(verify_domination(&se, &m).is_empty());
        // adjacent pair: (3 + 1 + 1 + 1)/4
        let adjacent = se.expected_distance(0, 1);
        assert!((adjacent - 1.5).abs() < 1e-12);
        // antipodal pair keeps its distance
        let antipodal = se.expected_distance(0, 2);
        assert!((antipodal - 2.0).abs() < 1e-12);
        let (d, _) = expected_stretch(&se, &m);
        assert!((d - 1.5).abs() < 1e-12);
    }

    #[test]
    fn karp_closed_form_exhaustive() {
        for n in 3..=12 {
            let se = karp_cycle_embedding(n).unwrap();
            let m = shortest_path_metric(&graphs::cycle(n).unwrap());
            for u in 0..n {
                for v in (u + 1)..n {
                    let l = m.dist(u, v);
                    let expected = 2.0 * l * (n as f64 - l) / n as f64;
                    assert!(
                        (se.expected_distance(u, v) - expected).abs() < 1e-9,
                        "n={n}, pair=({u},{v})"
                    );
                }
            }
            let (d, _) = expected_stretch(&se, &m);
            let formula = 2.0 * (n as f64 - 1.0) / n as f64;
            assert!((d - formula).abs() < 1e-9);
        }
    }

    #[test]
    fn karp_rejects_tiny_cycles() {
        assert!(matches!(karp_cycle_embedding(2), Err(EmbeddingError::CycleTooSmall(2))));
    }

    #[test]
    fn shrunk_component_is_reported() {
        let two = MetricSpace::from_table(vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let tree = WeightedTree::new(0, vec![0, 0], vec![0.0, 2.0]).unwrap();
        let emb = TreeEmbedding::new(tree, vec![0, 1], &two).unwrap();
        let se = StochasticEmbedding::new(vec![(1.0, emb)]).unwrap();
        // check against a stretched ground metric: the tree now contracts
        let stretched =
            MetricSpace::from_table(vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let violations = verify_domination(&se, &stretched);
        assert_eq!(violations.len(), 1);
        assert!((violations[0].deficit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_tree_embedding_has_stretch_one() {
        let t = graphs::random_weighted_tree(8, 2).unwrap();
        let m = MetricSpace::from_fn(8, |i, j| t.distance(i, j)).unwrap();
        let emb = TreeEmbedding::new(t, (0..8).collect(), &m).unwrap();
        let se = StochasticEmbedding::new(vec![(1.0, emb)]).unwrap();
        let (d, _) = expected_stretch(&se, &m);
        assert!((d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn frt_mean_stretch_sanity_on_cycle() {
        let m = shortest_path_metric(&graphs::cycle(4).unwrap());
        let se = frt_ensemble(&m, 200, 0).unwrap();
        let (d, _) = expected_stretch(&se, &m);
        assert!(d <= 32.0, "stretch {d} blew the 16·log2(4) tripwire");
    }
}
