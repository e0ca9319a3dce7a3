//! Lifting a stochastic tree embedding of the ground space to lamplighter
//! level and composing with the per-tree ℓ₁ embedding.
//!
//! For each component (pᵢ, fᵢ), a configuration (A, x) lifts to
//! (fᵢ(A), fᵢ(x)) on the tree, gets embedded there, and the blocks are
//! concatenated under per-component namespaces with weights pᵢ. Appending
//! the lamp indicator block turns the τ-level map into the full
//! lamplighter-distance map, additively.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::metric::{measure_distortion, DistortionReport, MetricSpace};
use crate::stochastic::{StochasticEmbedding, TreeEmbedding};
use crate::tree::{embed_ts_tree, tau_tree, CoordKey, SparseVector};
use crate::tsp::{tau, LamplighterPoint, TspError};
use crate::DEFAULT_TOL;

/// Image of a configuration under one component's point map: lamps map
/// pointwise, the position maps directly. Injectivity of the point map
/// keeps the lamp count.
pub fn lift_point(emb: &TreeEmbedding, p: &LamplighterPoint) -> LamplighterPoint {
    LamplighterPoint::new(
        p.lamps.iter().map(|&a| emb.map_point(a)),
        emb.map_point(p.pos),
    )
}

/// τ-level ℓ₁ embedding: the weighted direct sum of the per-tree
/// embeddings of the lifted configuration.
pub fn embed_ts_l1(se: &StochasticEmbedding, p: &LamplighterPoint) -> SparseVector {
    let mut out = SparseVector::new();
    for (idx, (prob, emb)) in se.components().iter().enumerate() {
        let lifted = lift_point(emb, p);
        let block = embed_ts_tree(emb.tree(), &lifted);
        out.extend_scaled(idx as u64, &block, *prob);
    }
    out
}

/// Full lamplighter-distance map: the τ-level embedding plus the lamp
/// indicator block, which contributes exactly |AΔB| to every pairwise
/// difference.
pub fn embed_lamplighter_l1(se: &StochasticEmbedding, p: &LamplighterPoint) -> SparseVector {
    let mut out = embed_ts_l1(se, p);
    for &lamp in &p.lamps {
        out.insert(CoordKey::Lamp { point: lamp }, 1.0);
    }
    out
}

/// Distortion of the end-to-end map against exact lamplighter distance on
/// the given pairs. Embeddings are computed once per distinct endpoint.
pub fn pipeline_distortion(
    se: &StochasticEmbedding,
    m: &MetricSpace,
    pairs: &[(LamplighterPoint, LamplighterPoint)],
) -> Result<DistortionReport, PipelineError> {
    let mut cache: BTreeMap<&LamplighterPoint, SparseVector> = BTreeMap::new();
    let mut samples = Vec::with_capacity(pairs.len());
    for (u, v) in pairs {
        for point in [u, v] {
            if !cache.contains_key(point) {
                cache.insert(point, embed_lamplighter_l1(se, point));
            }
        }
        let source = crate::tsp::lamplighter_distance(m, u, v)?;
        let target = cache[u].l1_distance(&cache[v]);
        samples.push((source, target));
    }
    Ok(measure_distortion(&samples)?)
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Tsp(#[from] TspError),
    #[error(transparent)]
    Metric(#[from] crate::metric::MetricError),
}

/// A failed lifting inequality on one tested pair.
#[derive(Debug, Clone, Serialize)]
pub enum LiftingViolation {
    /// Component's lifted τ fell below the ground τ.
    Domination { component: usize, pair: usize, lifted: f64, ground: f64 },
    /// Averaged lifted τ exceeded D · ground τ.
    AveragedStretch { pair: usize, averaged: f64, bound: f64 },
}

/// Numeric check of the lifting lemma on explicit pairs: per component,
/// τ_tree(lift u, lift v) ≥ τ_X(u, v) (tree side by the closed form, ground
/// side by the subset DP), and Σ pᵢ τ_tree ≤ D·τ_X for the supplied D.
pub fn verify_lifting(
    se: &StochasticEmbedding,
    m: &MetricSpace,
    pairs: &[(LamplighterPoint, LamplighterPoint)],
    stretch_bound: f64,
) -> Result<Vec<LiftingViolation>, TspError> {
    let mut out = Vec::new();
    for (pair_idx, (u, v)) in pairs.iter().enumerate() {
        let ground = tau(m, u, v)?;
        let mut averaged = 0.0;
        for (comp_idx, (prob, emb)) in se.components().iter().enumerate() {
            let lifted = tau_tree(emb.tree(), &lift_point(emb, u), &lift_point(emb, v));
            averaged += prob * lifted;
            if lifted + DEFAULT_TOL * ground.max(1.0) < ground {
                out.push(LiftingViolation::Domination {
                    component: comp_idx,
                    pair: pair_idx,
                    lifted,
                    ground,
                });
            }
        }
        let bound = stretch_bound * ground;
        if averaged > bound + DEFAULT_TOL * bound.max(1.0) {
            out.push(LiftingViolation::AveragedStretch { pair: pair_idx, averaged, bound });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs;
    use crate::metric::shortest_path_metric;
    use crate::sampling;
    use crate::stochastic::{expected_stretch, frt_ensemble, karp_cycle_embedding};
    use crate::tsp::lamplighter_distance;

    #[test]
    fn lift_point_basics() {
        let m = shortest_path_metric(&graphs::cycle(4).unwrap());
        let se = karp_cycle_embedding(4).unwrap();
        let (_, emb) = &se.components()[1];
        let p = LamplighterPoint::new([0, 2], 1);
        let lifted = lift_point(emb, &p);
        // identity point map on cycle vertices
        assert_eq!(lifted, p);
        let empty = LamplighterPoint::new([], 3);
        assert_eq!(lift_point(emb, &empty).lamps.len(), 0);
        drop(m);
    }

    #[test]
    fn identical_points_embed_identically() {
        let m = shortest_path_metric(&graphs::grid(3, 2).unwrap());
        let se = frt_ensemble(&m, 5, 21).unwrap();
        let p = LamplighterPoint::new([1, 7], 4);
        let a = embed_lamplighter_l1(&se, &p);
        let b = embed_lamplighter_l1(&se, &p);
        assert_eq!(a.l1_distance(&b), 0.0);
    }

    #[test]
    fn lamp_block_is_exactly_additive() {
        let m = shortest_path_metric(&graphs::cycle(6).unwrap());
        let se = frt_ensemble(&m, 3, 8).unwrap();
        for (u, v) in sampling::sampled_pairs(6, 60, 4, 13) {
            let ts = embed_ts_l1(&se, &u).l1_distance(&embed_ts_l1(&se, &v));
            let la = embed_lamplighter_l1(&se, &u).l1_distance(&embed_lamplighter_l1(&se, &v));
            let sd = u.symm_diff(&v).len() as f64;
            assert!(
                (la - ts - sd).abs() < 1e-9,
                "lamp block not additive: {la} != {ts} + {sd}"
            );
        }
    }

    #[test]
    fn empty_lamps_reduce_to_root_path_blocks() {
        let m = shortest_path_metric(&graphs::cycle(5).unwrap());
        let se = frt_ensemble(&m, 4, 3).unwrap();
        let u = LamplighterPoint::new([], 0);
        let v = LamplighterPoint::new([], 2);
        let d = embed_ts_l1(&se, &u).l1_distance(&embed_ts_l1(&se, &v));
        // with no lamps the embedding is a stochastic tree embedding of X
        let expected: f64 = se
            .components()
            .iter()
            .map(|(p, e)| p * e.image_distance(0, 2))
            .sum();
        assert!((d - expected).abs() < 1e-9);
    }

    #[test]
    fn karp_c4_pipeline_distortion_is_bounded() {
        let m = shortest_path_metric(&graphs::cycle(4).unwrap());
        let se = karp_cycle_embedding(4).unwrap();
        let pairs = sampling::exhaustive_pairs(4, 2);
        let report = pipeline_distortion(&se, &m, &pairs).unwrap();
        let (d, _) = expected_stretch(&se, &m);
        assert!((d - 1.5).abs() < 1e-12);
        assert!(
            report.distortion <= 6.0 * d + 1e-9,
            "distortion {} above 6D = {}",
            report.distortion,
            6.0 * d
        );
    }

    #[test]
    fn lifting_inequalities_hold_for_karp_c6() {
        let m = shortest_path_metric(&graphs::cycle(6).unwrap());
        let se = karp_cycle_embedding(6).unwrap();
        let (d, _) = expected_stretch(&se, &m);
        let pairs: Vec<_> = sampling::exhaustive_pairs(6, 2)
            .into_iter()
            .filter(|(u, v)| {
                // τ-level checks need τ > 0
                tau(&m, u, v).unwrap() > 0.0
            })
            .collect();
        let violations = verify_lifting(&se, &m, &pairs, d).unwrap();
        assert!(violations.is_empty(), "found {} violations", violations.len());
    }

    #[test]
    fn lamplighter_distance_matches_pipeline_source() {
        let m = shortest_path_metric(&graphs::path(4).unwrap());
        let u = LamplighterPoint::new([3], 0);
        let v = LamplighterPoint::new([1], 2);
        // τ = tsp(0, {1,3}, 2) = 4, lamp term 2
        assert_eq!(lamplighter_distance(&m, &u, &v).unwrap(), 6.0);
    }
}
