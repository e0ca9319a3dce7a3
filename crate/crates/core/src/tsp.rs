//! Exact travelling-salesman semi-metric, lamplighter distance, and the
//! brute-force lamplighter-graph BFS oracle that certifies them.

use std::collections::BTreeSet;
use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::metric::{MetricSpace, WeightedGraph};

/// Default cap on the symmetric-difference size for the subset DP.
pub const DEFAULT_TSP_CAP: usize = 20;

/// Vertex-count cap for the explicit lamplighter graph (2^n * n states).
pub const BFS_VERTEX_CAP: usize = 14;

#[derive(Debug, Error, PartialEq)]
pub enum TspError {
    #[error("target set size {0} exceeds the cap {1}")]
    CapExceeded(usize, usize),
    #[error("point index {0} out of range (n={1})")]
    PointOutOfRange(usize, usize),
    #[error("BFS oracle requires n <= {1}, got {0}")]
    BfsTooLarge(usize, usize),
    #[error("BFS oracle requires unit edge weights")]
    NotUnitWeights,
}

/// A lamplighter configuration: the set of lit lamps and the lamplighter's
/// position, both over the points of an ambient space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LamplighterPoint {
    pub lamps: BTreeSet<usize>,
    pub pos: usize,
}

impl LamplighterPoint {
    pub fn new(lamps: impl IntoIterator<Item = usize>, pos: usize) -> Self {
        LamplighterPoint { lamps: lamps.into_iter().collect(), pos }
    }

    pub fn check_range(&self, n: usize) -> Result<(), TspError> {
        if self.pos >= n {
            return Err(TspError::PointOutOfRange(self.pos, n));
        }
        if let Some(&max) = self.lamps.iter().next_back() {
            if max >= n {
                return Err(TspError::PointOutOfRange(max, n));
            }
        }
        Ok(())
    }

    pub fn symm_diff(&self, other: &Self) -> BTreeSet<usize> {
        self.lamps.symmetric_difference(&other.lamps).copied().collect()
    }
}

impl fmt::Display for LamplighterPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({{")?;
        for (i, lamp) in self.lamps.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{lamp}")?;
        }
        write!(f, "}},{})", self.pos)
    }
}

/// One exact point-to-point TSP query: travel from `start` to `end` visiting
/// every target.
#[derive(Debug, Clone)]
pub struct TspInstance<'a> {
    space: &'a MetricSpace,
    start: usize,
    end: usize,
    targets: BTreeSet<usize>,
    cap: usize,
}

impl<'a> TspInstance<'a> {
    pub fn new(
        space: &'a MetricSpace,
        start: usize,
        targets: impl IntoIterator<Item = usize>,
        end: usize,
    ) -> Result<Self, TspError> {
        let n = space.len();
        let targets: BTreeSet<usize> = targets.into_iter().collect();
        if start >= n {
            return Err(TspError::PointOutOfRange(start, n));
        }
        if end >= n {
            return Err(TspError::PointOutOfRange(end, n));
        }
        if let Some(&max) = targets.iter().next_back() {
            if max >= n {
                return Err(TspError::PointOutOfRange(max, n));
            }
        }
        Ok(TspInstance { space, start, end, targets, cap: DEFAULT_TSP_CAP })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }
}

/// Minimum cost of a path from `start` to `end` through all targets, by
/// subset dynamic programming over (visited set, last target).
///
/// Targets equal to `start` or `end` are dropped first: a path visits its
/// endpoints anyway, and removing coincident points preserves the minimum.
/// `start == end` is solved by the same recursion and yields the cheapest
/// closed walk through the targets.
pub fn tsp_exact(inst: &TspInstance) -> Result<f64, TspError> {
    let m = inst.space;
    let cs: Vec<usize> = inst
        .targets
        .iter()
        .copied()
        .filter(|&c| c != inst.start && c != inst.end)
        .collect();
    let k = cs.len();
    if k > inst.cap {
        return Err(TspError::CapExceeded(k, inst.cap));
    }
    if k == 0 {
        return Ok(m.dist(inst.start, inst.end));
    }
    let full = (1usize << k) - 1;
    let mut dp = vec![f64::INFINITY; (full + 1) * k];
    for (j, &c) in cs.iter().enumerate() {
        dp[(1 << j) * k + j] = m.dist(inst.start, c);
    }
    for mask in 1..=full {
        for last in 0..k {
            if mask & (1 << last) == 0 {
                continue;
            }
            let cost = dp[mask * k + last];
            if !cost.is_finite() {
                continue;
            }
            for next in 0..k {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let cand = cost + m.dist(cs[last], cs[next]);
                if cand < dp[nm * k + next] {
                    dp[nm * k + next] = cand;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    for last in 0..k {
        let cand = dp[full * k + last] + m.dist(cs[last], inst.end);
        if cand < best {
            best = cand;
        }
    }
    Ok(best)
}

/// Reference solver: full enumeration over target orderings. Exponential;
/// independent of the subset DP and kept for cross-checking it.
pub fn tsp_brute_force(inst: &TspInstance) -> Result<f64, TspError> {
    let m = inst.space;
    let mut cs: Vec<usize> = inst
        .targets
        .iter()
        .copied()
        .filter(|&c| c != inst.start && c != inst.end)
        .collect();
    if cs.len() > 9 {
        return Err(TspError::CapExceeded(cs.len(), 9));
    }
    let mut best = f64::INFINITY;
    permute(&mut cs, 0, &mut |order: &[usize]| {
        let mut cost = 0.0;
        let mut prev = inst.start;
        for &c in order {
            cost += m.dist(prev, c);
            prev = c;
        }
        cost += m.dist(prev, inst.end);
        if cost < best {
            best = cost;
        }
    });
    Ok(best)
}

fn permute(xs: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == xs.len() {
        visit(xs);
        return;
    }
    for i in k..xs.len() {
        xs.swap(k, i);
        permute(xs, k + 1, visit);
        xs.swap(k, i);
    }
}

/// Travelling-salesman semi-metric: τ((A,x),(B,y)) = tsp(x, AΔB, y).
pub fn tau(
    space: &MetricSpace,
    u: &LamplighterPoint,
    v: &LamplighterPoint,
) -> Result<f64, TspError> {
    u.check_range(space.len())?;
    v.check_range(space.len())?;
    tsp_exact(&TspInstance::new(space, u.pos, u.symm_diff(v), v.pos)?)
}

/// Lamplighter distance: τ plus the symmetric-difference count.
pub fn lamplighter_distance(
    space: &MetricSpace,
    u: &LamplighterPoint,
    v: &LamplighterPoint,
) -> Result<f64, TspError> {
    let sd = u.symm_diff(v).len();
    Ok(tau(space, u, v)? + sd as f64)
}

/// Breadth-first distance in the explicitly constructed lamplighter graph
/// of a unit-weight graph. States are (lamp mask, position); moves are a
/// single graph step or toggling the lamp at the current vertex.
pub fn lamplighter_bfs_oracle(
    g: &WeightedGraph,
    u: &LamplighterPoint,
    v: &LamplighterPoint,
) -> Result<u64, TspError> {
    let n = g.n();
    if n > BFS_VERTEX_CAP {
        return Err(TspError::BfsTooLarge(n, BFS_VERTEX_CAP));
    }
    if !g.is_unit_weight() {
        return Err(TspError::NotUnitWeights);
    }
    u.check_range(n)?;
    v.check_range(n)?;
    let distances = lamplighter_bfs_all(g, u)?;
    let target = encode(v, n);
    Ok(distances[target])
}

/// BFS distances from `u` to every lamplighter configuration at once.
/// Index of (B, y) in the result is `mask(B) * n + y`.
pub fn lamplighter_bfs_all(g: &WeightedGraph, u: &LamplighterPoint) -> Result<Vec<u64>, TspError> {
    let n = g.n();
    if n > BFS_VERTEX_CAP {
        return Err(TspError::BfsTooLarge(n, BFS_VERTEX_CAP));
    }
    if !g.is_unit_weight() {
        return Err(TspError::NotUnitWeights);
    }
    u.check_range(n)?;
    let adj = g.adjacency();
    let states = (1usize << n) * n;
    let mut dist = vec![u64::MAX; states];
    let start = encode(u, n);
    dist[start] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        let d = dist[s];
        let mask = s / n;
        let pos = s % n;
        let toggle = (mask ^ (1 << pos)) * n + pos;
        if dist[toggle] == u64::MAX {
            dist[toggle] = d + 1;
            queue.push_back(toggle);
        }
        for &(next, _) in &adj[pos] {
            let step = mask * n + next;
            if dist[step] == u64::MAX {
                dist[step] = d + 1;
                queue.push_back(step);
            }
        }
    }
    Ok(dist)
}

fn encode(p: &LamplighterPoint, n: usize) -> usize {
    let mut mask = 0usize;
    for &lamp in &p.lamps {
        mask |= 1 << lamp;
    }
    mask * n + p.pos
}

/// Decodes the state index used by [`lamplighter_bfs_all`].
pub fn decode_state(state: usize, n: usize) -> LamplighterPoint {
    let mask = state / n;
    let pos = state % n;
    LamplighterPoint::new((0..n).filter(|&i| mask & (1 << i) != 0), pos)
}
