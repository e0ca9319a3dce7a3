//! Optimal-transport norms on zero-sum molecules, the exact ℓ₁ coordinates
//! on trees, and the operator lift along stochastic embeddings.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::metric::MetricSpace;
use crate::stochastic::{StochasticEmbedding, TreeEmbedding};
use crate::tree::{CoordKey, EdgeId, SparseVector, WeightedTree};
use crate::DEFAULT_TOL;

#[derive(Debug, Error, PartialEq)]
pub enum FreeSpaceError {
    #[error("molecule is unbalanced: coefficients sum to {0}")]
    Unbalanced(f64),
    #[error("molecule references point {0} outside the space (n={1})")]
    PointOutOfRange(usize, usize),
    #[error("transport solver stalled after {0} augmentations")]
    SolverStall(usize),
}

/// Finitely supported real function with total mass zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Molecule {
    support: BTreeMap<usize, f64>,
}

impl Molecule {
    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self, FreeSpaceError> {
        let mut support: BTreeMap<usize, f64> = BTreeMap::new();
        for (point, coeff) in entries {
            let slot = support.entry(point).or_insert(0.0);
            *slot += coeff;
        }
        support.retain(|_, v| *v != 0.0);
        let total: f64 = support.values().sum();
        if total.abs() > DEFAULT_TOL {
            return Err(FreeSpaceError::Unbalanced(total));
        }
        Ok(Molecule { support })
    }

    pub fn zero() -> Self {
        Molecule::default()
    }

    /// δ_p − δ_q; the zero molecule when p == q.
    pub fn dipole(p: usize, q: usize) -> Self {
        Molecule::new([(p, 1.0), (q, -1.0)]).expect("dipole is balanced")
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().map(|(&p, &c)| (p, c))
    }

    pub fn coefficient(&self, point: usize) -> f64 {
        self.support.get(&point).copied().unwrap_or(0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let support = if factor == 0.0 {
            BTreeMap::new()
        } else {
            self.support.iter().map(|(&p, &c)| (p, factor * c)).collect()
        };
        Molecule { support }
    }

    pub fn plus(&self, other: &Molecule) -> Self {
        let mut support = self.support.clone();
        for (p, c) in other.support() {
            let slot = support.entry(p).or_insert(0.0);
            *slot += c;
            if *slot == 0.0 {
                support.remove(&p);
            }
        }
        Molecule { support }
    }

    /// Random molecule supported on at most `max_support` of `n` points,
    /// with integer-valued coefficients balanced to zero mass.
    pub fn random(n: usize, max_support: usize, rng: &mut impl Rng) -> Self {
        let size = rng.gen_range(2..=max_support.max(2).min(n)).max(2);
        let points = crate::graphs::random_subset(n, size, rng);
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut total = 0i64;
        for (idx, &p) in points.iter().enumerate() {
            if idx + 1 == points.len() {
                entries.push((p, -total as f64));
            } else {
                let c = rng.gen_range(-4i64..=4);
                total += c;
                entries.push((p, c as f64));
            }
        }
        Molecule::new(entries).expect("constructed balanced")
    }

    fn check_range(&self, n: usize) -> Result<(), FreeSpaceError> {
        if let Some((&max, _)) = self.support.iter().next_back() {
            if max >= n {
                return Err(FreeSpaceError::PointOutOfRange(max, n));
            }
        }
        Ok(())
    }
}

/// Optimal transportation cost of moving the positive part of the molecule
/// onto its negative part with costs d_X. Successive shortest augmenting
/// paths with potentials on the complete bipartite support graph; exact at
/// desk scale (support ≤ a few dozen points).
pub fn lf_norm(m: &MetricSpace, mu: &Molecule) -> Result<f64, FreeSpaceError> {
    mu.check_range(m.len())?;
    let total: f64 = mu.support.values().sum();
    if total.abs() > DEFAULT_TOL {
        return Err(FreeSpaceError::Unbalanced(total));
    }
    let sources: Vec<(usize, f64)> =
        mu.support().filter(|&(_, c)| c > 0.0).map(|(p, c)| (p, c)).collect();
    let sinks: Vec<(usize, f64)> =
        mu.support().filter(|&(_, c)| c < 0.0).map(|(p, c)| (p, -c)).collect();
    if sources.is_empty() {
        return Ok(0.0);
    }

    let ns = sources.len();
    let nt = sinks.len();
    let cost = |i: usize, j: usize| m.dist(sources[i].0, sinks[j].0);

    let mut remaining_supply: Vec<f64> = sources.iter().map(|&(_, c)| c).collect();
    let mut remaining_demand: Vec<f64> = sinks.iter().map(|&(_, c)| c).collect();
    let mut flow = vec![0.0f64; ns * nt];
    // potentials keep reduced costs nonnegative for the Dijkstra scan
    let mut phi_src = vec![0.0f64; ns];
    let mut phi_snk = vec![0.0f64; nt];
    let eps = 1e-12;
    let max_rounds = 16 * (ns + nt) * (ns + nt) + 64;

    for round in 0..=max_rounds {
        if round == max_rounds {
            return Err(FreeSpaceError::SolverStall(round));
        }
        // Dijkstra over the residual bipartite graph, dense scan
        let inf = f64::INFINITY;
        let mut dist_src = vec![inf; ns];
        let mut dist_snk = vec![inf; nt];
        let mut prev_snk = vec![usize::MAX; nt]; // source feeding this sink
        let mut prev_src = vec![usize::MAX; ns]; // sink refunding this source
        let mut done_src = vec![false; ns];
        let mut done_snk = vec![false; nt];
        for i in 0..ns {
            if remaining_supply[i] > eps {
                dist_src[i] = 0.0;
            }
        }
        loop {
            // pick the unfinished node with smallest tentative distance
            let mut best = inf;
            let mut pick: Option<(bool, usize)> = None;
            for i in 0..ns {
                if !done_src[i] && dist_src[i] < best {
                    best = dist_src[i];
                    pick = Some((true, i));
                }
            }
            for j in 0..nt {
                if !done_snk[j] && dist_snk[j] < best {
                    best = dist_snk[j];
                    pick = Some((false, j));
                }
            }
            let Some((is_source, idx)) = pick else { break };
            if is_source {
                done_src[idx] = true;
                for j in 0..nt {
                    if done_snk[j] {
                        continue;
                    }
                    let reduced = cost(idx, j) + phi_src[idx] - phi_snk[j];
                    debug_assert!(reduced > -1e-7, "negative reduced cost {reduced}");
                    let cand = dist_src[idx] + reduced.max(0.0);
                    if cand < dist_snk[j] {
                        dist_snk[j] = cand;
                        prev_snk[j] = idx;
                    }
                }
            } else {
                done_snk[idx] = true;
                for i in 0..ns {
                    if done_src[i] || flow[i * nt + idx] <= eps {
                        continue;
                    }
                    let reduced = -(cost(i, idx) + phi_src[i] - phi_snk[idx]);
                    let cand = dist_snk[idx] + reduced.max(0.0);
                    if cand < dist_src[i] {
                        dist_src[i] = cand;
                        prev_src[i] = idx;
                    }
                }
            }
        }

        // cheapest reachable sink with unmet demand; supply roots have
        // prev_src == MAX (distance 0 cannot be improved)
        let target = (0..nt)
            .filter(|&j| remaining_demand[j] > eps && dist_snk[j] < inf)
            .min_by(|&a, &b| dist_snk[a].total_cmp(&dist_snk[b]));
        let Some(target) = target else {
            break;
        };
        let target_dist = dist_snk[target];

        // walk the alternating path back to a supply root, find the bottleneck
        let mut bottleneck = remaining_demand[target];
        let mut j = target;
        let root = loop {
            let i = prev_snk[j];
            if prev_src[i] == usize::MAX {
                bottleneck = bottleneck.min(remaining_supply[i]);
                break i;
            }
            let back = prev_src[i];
            bottleneck = bottleneck.min(flow[i * nt + back]);
            j = back;
        };
        // apply the augmentation
        let mut j = target;
        loop {
            let i = prev_snk[j];
            flow[i * nt + j] += bottleneck;
            if i == root && prev_src[i] == usize::MAX {
                remaining_supply[i] -= bottleneck;
                break;
            }
            let back = prev_src[i];
            flow[i * nt + back] -= bottleneck;
            j = back;
        }
        remaining_demand[target] -= bottleneck;

        // shift potentials, capped at the target distance so reduced costs
        // stay nonnegative on edges into unreached nodes
        for i in 0..ns {
            phi_src[i] += dist_src[i].min(target_dist);
        }
        for j in 0..nt {
            phi_snk[j] += dist_snk[j].min(target_dist);
        }
    }

    debug_assert!(
        remaining_demand.iter().all(|&d| d < 1e-7),
        "transport did not meet all demand"
    );
    let mut value = 0.0;
    for i in 0..ns {
        for j in 0..nt {
            value += flow[i * nt + j] * cost(i, j);
        }
    }
    Ok(value)
}

/// Exact tree free-space coordinates: one signed coordinate per non-root
/// vertex v, holding w_(v,parent) times the molecule mass in the subtree
/// under v. The ℓ₁ norm of the coordinates equals the transport norm on
/// the tree metric.
pub fn lf_norm_tree(
    t: &WeightedTree,
    mu: &Molecule,
) -> Result<(f64, SparseVector), FreeSpaceError> {
    mu.check_range(t.len())?;
    let n = t.len();
    let mut subtree_mass = vec![0.0f64; n];
    for (p, c) in mu.support() {
        subtree_mass[p] = c;
    }
    // fold leaves upward: children are processed strictly before parents
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(t.depth(v)));
    for &v in &order {
        if v != t.root() {
            let mass = subtree_mass[v];
            subtree_mass[t.parent(v)] += mass;
        }
    }
    let mut coords = SparseVector::new();
    let mut value = 0.0;
    for v in 0..n {
        if v == t.root() {
            continue;
        }
        let c = t.edge_weight(EdgeId(v)) * subtree_mass[v];
        if c != 0.0 {
            coords.insert(CoordKey::EdgeCut { edge: EdgeId(v) }, c);
            value += c.abs();
        }
    }
    Ok((value, coords))
}

/// Pushforward of a molecule along an injective point map.
pub fn lift_molecule(emb: &TreeEmbedding, mu: &Molecule) -> Molecule {
    Molecule::new(mu.support().map(|(p, c)| (emb.map_point(p), c)))
        .expect("pushforward of a balanced molecule stays balanced")
}

/// ℓ₁ image of a molecule under the stochastic embedding: per-component
/// tree free-space coordinates of the lifted molecule, weighted by pᵢ and
/// namespaced. Linear in the molecule.
pub fn lf_l1_embedding(se: &StochasticEmbedding, mu: &Molecule) -> SparseVector {
    let mut out = SparseVector::new();
    for (idx, (prob, emb)) in se.components().iter().enumerate() {
        let lifted = lift_molecule(emb, mu);
        let (_, coords) = lf_norm_tree(emb.tree(), &lifted)
            .expect("lifted molecule lives on the tree");
        out.extend_scaled(idx as u64, &coords, *prob);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs;
    use crate::metric::shortest_path_metric;
    use crate::stochastic::{expected_stretch, frt_ensemble, karp_cycle_embedding};

    fn unit_path_metric(n: usize) -> MetricSpace {
        shortest_path_metric(&graphs::path(n).unwrap())
    }

    #[test]
    fn zero_and_dipole_norms() {
        let m = unit_path_metric(3);
        assert_eq!(lf_norm(&m, &Molecule::zero()).unwrap(), 0.0);
        assert_eq!(lf_norm(&m, &Molecule::dipole(0, 2)).unwrap(), 2.0);
        assert!(Molecule::dipole(1, 1).is_zero());
    }

    #[test]
    fn unbalanced_molecule_is_rejected() {
        assert!(matches!(
            Molecule::new([(0, 1.0), (1, -0.5)]),
            Err(FreeSpaceError::Unbalanced(_))
        ));
    }

    #[test]
    fn double_dipole_on_path() {
        // δ0 + δ2 − 2δ1: one unit moves 0→1, one unit moves 2→1
        let m = unit_path_metric(3);
        let mu = Molecule::new([(0, 1.0), (2, 1.0), (1, -2.0)]).unwrap();
        assert!((lf_norm(&m, &mu).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tree_coordinates_on_path() {
        let t = WeightedTree::new(0, vec![0, 0, 1], vec![0.0, 1.0, 1.0]).unwrap();
        let mu = Molecule::new([(0, 1.0), (2, 1.0), (1, -2.0)]).unwrap();
        let (value, coords) = lf_norm_tree(&t, &mu).unwrap();
        assert!((value - 2.0).abs() < 1e-12);
        assert_eq!(coords.get(&CoordKey::EdgeCut { edge: EdgeId(1) }), -1.0);
        assert_eq!(coords.get(&CoordKey::EdgeCut { edge: EdgeId(2) }), 1.0);
    }

    #[test]
    fn dipole_to_parent_has_one_coordinate() {
        let t = graphs::random_weighted_tree(7, 5).unwrap();
        let v = 4;
        let mu = Molecule::dipole(v, t.parent(v));
        let (value, coords) = lf_norm_tree(&t, &mu).unwrap();
        assert_eq!(coords.len(), 1);
        assert!((value - t.edge_weight(EdgeId(v))).abs() < 1e-12);
    }

    #[test]
    fn tree_closed_form_matches_flow_solver() {
        let mut rng = crate::rng::rng_from(77);
        for trial in 0..500 {
            let n = rng.gen_range(2..=10);
            let t = graphs::random_weighted_tree(n, 40_000 + trial).unwrap();
            let m = MetricSpace::from_fn(n, |i, j| t.distance(i, j)).unwrap();
            let mu = Molecule::random(n, 6, &mut rng);
            let (closed, _) = lf_norm_tree(&t, &mu).unwrap();
            let flow = lf_norm(&m, &mu).unwrap();
            assert!(
                (closed - flow).abs() < 1e-9,
                "closed {closed} vs flow {flow} on trial {trial}"
            );
        }
    }

    #[test]
    fn norm_axioms_on_random_molecules() {
        let m = shortest_path_metric(&graphs::cycle(6).unwrap());
        let mut rng = crate::rng::rng_from(3);
        for _ in 0..100 {
            let a = Molecule::random(6, 4, &mut rng);
            let b = Molecule::random(6, 4, &mut rng);
            let na = lf_norm(&m, &a).unwrap();
            let nb = lf_norm(&m, &b).unwrap();
            let nab = lf_norm(&m, &a.plus(&b)).unwrap();
            assert!(nab <= na + nb + 1e-9, "triangle failed: {nab} > {na} + {nb}");
            let scaled = lf_norm(&m, &a.scaled(-2.5)).unwrap();
            assert!((scaled - 2.5 * na).abs() < 1e-9, "homogeneity failed");
        }
    }

    #[test]
    fn lift_preserves_support_and_mass() {
        let m = shortest_path_metric(&graphs::cycle(5).unwrap());
        let se = frt_ensemble(&m, 3, 19).unwrap();
        let (_, emb) = &se.components()[0];
        assert!(lift_molecule(emb, &Molecule::zero()).is_zero());
        let mu = Molecule::new([(0, 2.0), (3, -1.0), (4, -1.0)]).unwrap();
        let lifted = lift_molecule(emb, &mu);
        assert_eq!(lifted.support().count(), 3);
        assert!((lifted.coefficient(emb.map_point(0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dipole_image_norm_is_stochastic_distance() {
        let se = karp_cycle_embedding(5).unwrap();
        let m = shortest_path_metric(&graphs::cycle(5).unwrap());
        for p in 0..5 {
            for q in (p + 1)..5 {
                let image = lf_l1_embedding(&se, &Molecule::dipole(p, q));
                let expected = se.expected_distance(p, q);
                assert!((image.l1_norm() - expected).abs() < 1e-9);
            }
        }
        let (d, _) = expected_stretch(&se, &m);
        // dipole distortion equals the metric stochastic distortion
        let mut worst = 0.0f64;
        for p in 0..5 {
            for q in (p + 1)..5 {
                let image = lf_l1_embedding(&se, &Molecule::dipole(p, q));
                worst = worst.max(image.l1_norm() / m.dist(p, q));
            }
        }
        assert!((worst - d).abs() < 1e-9);
    }

    #[test]
    fn embedding_is_linear() {
        let m = shortest_path_metric(&graphs::grid(3, 2).unwrap());
        let se = frt_ensemble(&m, 4, 6).unwrap();
        let mut rng = crate::rng::rng_from(8);
        for _ in 0..50 {
            let a = Molecule::random(9, 5, &mut rng);
            let b = Molecule::random(9, 5, &mut rng);
            let sum_image = lf_l1_embedding(&se, &a.plus(&b));
            let mut image_sum = lf_l1_embedding(&se, &a);
            for (k, v) in lf_l1_embedding(&se, &b).iter() {
                image_sum.add(k.clone(), v);
            }
            assert!(sum_image.l1_distance(&image_sum) < 1e-9, "additivity failed");
            let scaled_image = lf_l1_embedding(&se, &a.scaled(3.0));
            assert!(scaled_image.l1_distance(&lf_l1_embedding(&se, &a).scaled_by(3.0)) < 1e-9);
        }
    }

    #[test]
    fn lifted_norm_dominates_and_averages() {
        let m = shortest_path_metric(&graphs::cycle(4).unwrap());
        let se = karp_cycle_embedding(4).unwrap();
        let (d, _) = expected_stretch(&se, &m);
        let mut rng = crate::rng::rng_from(55);
        for _ in 0..200 {
            let mu = Molecule::random(4, 4, &mut rng);
            let ground = lf_norm(&m, &mu).unwrap();
            let mut averaged = 0.0;
            for (p, emb) in se.components() {
                let (lifted, _) = lf_norm_tree(emb.tree(), &lift_molecule(emb, &mu)).unwrap();
                assert!(lifted >= ground - 1e-9, "domination failed: {lifted} < {ground}");
                averaged += p * lifted;
            }
            assert!(averaged <= d * ground + 1e-9, "averaged bound failed");
        }
    }
}
