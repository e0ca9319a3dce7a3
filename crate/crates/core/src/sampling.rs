//! Deterministic pair-sampling policies for lamplighter configurations.

use rand::Rng;

use crate::graphs::random_subset;
use crate::rng::rng_from;
use crate::tsp::LamplighterPoint;

/// Every configuration with at most `max_lamps` lit lamps.
pub fn exhaustive_points(n: usize, max_lamps: usize) -> Vec<LamplighterPoint> {
    let mut subsets: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_lamps.min(n) {
        let mut next = Vec::new();
        for set in &frontier {
            let start = set.last().map_or(0, |&l| l + 1);
            for item in start..n {
                let mut grown = set.clone();
                grown.push(item);
                next.push(grown);
            }
        }
        subsets.extend(next.iter().cloned());
        frontier = next;
    }
    let mut out = Vec::with_capacity(subsets.len() * n);
    for set in subsets {
        for pos in 0..n {
            out.push(LamplighterPoint::new(set.iter().copied(), pos));
        }
    }
    out
}

/// All unordered pairs of distinct configurations with at most `max_lamps`
/// lamps each. Quadratic in the point count; meant for small ground spaces.
pub fn exhaustive_pairs(
    n: usize,
    max_lamps: usize,
) -> Vec<(LamplighterPoint, LamplighterPoint)> {
    let points = exhaustive_points(n, max_lamps);
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            out.push((points[i].clone(), points[j].clone()));
        }
    }
    out
}

/// `count` seeded random pairs with symmetric difference at most
/// `max_symmdiff` (and at most 6 base lamps, keeping embeddings small).
pub fn sampled_pairs(
    n: usize,
    count: usize,
    max_symmdiff: usize,
    seed: u64,
) -> Vec<(LamplighterPoint, LamplighterPoint)> {
    let mut rng = rng_from(seed);
    let max_base = 6.min(n);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let base = random_subset(n, rng.gen_range(0..=max_base), &mut rng);
        let diff = random_subset(n, rng.gen_range(0..=max_symmdiff.min(n)), &mut rng);
        let u = LamplighterPoint::new(base.iter().copied(), rng.gen_range(0..n));
        let mut lamps_v: std::collections::BTreeSet<usize> = base.into_iter().collect();
        for d in diff {
            if !lamps_v.remove(&d) {
                lamps_v.insert(d);
            }
        }
        let v = LamplighterPoint::new(lamps_v, rng.gen_range(0..n));
        if u != v {
            out.push((u, v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_counts() {
        // (1 + 4 + 6) subsets × 4 positions
        assert_eq!(exhaustive_points(4, 2).len(), 44);
        assert_eq!(exhaustive_points(3, 0).len(), 3);
    }

    #[test]
    fn sampled_pairs_are_deterministic_and_bounded() {
        let a = sampled_pairs(10, 50, 4, 3);
        let b = sampled_pairs(10, 50, 4, 3);
        assert_eq!(a, b);
        for (u, v) in &a {
            assert!(u.symm_diff(v).len() <= 4);
            assert_ne!(u, v);
        }
    }
}
