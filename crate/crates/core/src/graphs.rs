//! Canonical unit-weight graph families and the line-oriented graph file
//! format consumed by the CLI.

use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::metric::{MetricError, WeightedGraph};
use crate::rng::rng_from;
use crate::tree::{TreeError, WeightedTree};

#[derive(Debug, Error)]
pub enum GraphGenError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn unit(n: usize, edges: Vec<(usize, usize)>) -> Result<WeightedGraph, GraphGenError> {
    Ok(WeightedGraph::new(n, edges.into_iter().map(|(u, v)| (u, v, 1.0)).collect())?)
}

pub fn path(n: usize) -> Result<WeightedGraph, GraphGenError> {
    if n == 0 {
        return Err(GraphGenError::InvalidParam("path requires n >= 1".into()));
    }
    unit(n, (1..n).map(|v| (v - 1, v)).collect())
}

pub fn cycle(n: usize) -> Result<WeightedGraph, GraphGenError> {
    if n < 3 {
        return Err(GraphGenError::InvalidParam("cycle requires n >= 3".into()));
    }
    unit(n, (0..n).map(|v| (v, (v + 1) % n)).collect())
}

pub fn complete(n: usize) -> Result<WeightedGraph, GraphGenError> {
    if n == 0 {
        return Err(GraphGenError::InvalidParam("complete requires n >= 1".into()));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push((u, v));
        }
    }
    unit(n, edges)
}

/// d-dimensional grid with `side` vertices per axis, unit edges between
/// ℓ₁-neighbours. Vertex index is row-major over coordinates.
pub fn grid(side: usize, d: usize) -> Result<WeightedGraph, GraphGenError> {
    if side == 0 || d == 0 {
        return Err(GraphGenError::InvalidParam("grid requires side, d >= 1".into()));
    }
    let n = side.checked_pow(d as u32).filter(|&n| n <= 1 << 20).ok_or_else(|| {
        GraphGenError::InvalidParam(format!("grid {side}^{d} too large"))
    })?;
    let mut edges = Vec::new();
    for idx in 0..n {
        let mut rem = idx;
        let mut stride = n;
        for _axis in 0..d {
            stride /= side;
            let coord = rem / stride;
            rem %= stride;
            if coord + 1 < side {
                edges.push((idx, idx + stride));
            }
        }
    }
    unit(n, edges)
}

/// Discrete torus (ℤ_side)^d, unit edges; the Cayley graph of the cyclic
/// product with standard generators.
pub fn torus(side: usize, d: usize) -> Result<WeightedGraph, GraphGenError> {
    if side < 3 || d == 0 {
        return Err(GraphGenError::InvalidParam("torus requires side >= 3, d >= 1".into()));
    }
    let n = side.checked_pow(d as u32).filter(|&n| n <= 1 << 20).ok_or_else(|| {
        GraphGenError::InvalidParam(format!("torus {side}^{d} too large"))
    })?;
    let mut edges = std::collections::BTreeSet::new();
    for idx in 0..n {
        let mut rem = idx;
        let mut stride = n;
        for _axis in 0..d {
            stride /= side;
            let coord = rem / stride;
            rem %= stride;
            let next = if coord + 1 < side { idx + stride } else { idx - coord * stride };
            if idx != next {
                edges.insert((idx.min(next), idx.max(next)));
            }
        }
    }
    unit(n, edges.into_iter().collect())
}

/// Level-k diamond graph: D_0 is a single edge, and each level replaces
/// every edge by a 4-cycle through two fresh vertices.
pub fn diamond(level: usize) -> Result<WeightedGraph, GraphGenError> {
    if level > 5 {
        return Err(GraphGenError::InvalidParam("diamond level capped at 5".into()));
    }
    let mut n = 2usize;
    let mut edges = vec![(0usize, 1usize)];
    for _ in 0..level {
        let mut next = Vec::with_capacity(edges.len() * 4);
        for (u, v) in edges {
            let a = n;
            let b = n + 1;
            n += 2;
            next.push((u, a));
            next.push((a, v));
            next.push((u, b));
            next.push((b, v));
        }
        edges = next;
    }
    unit(n, edges)
}

/// Random recursive tree: vertex v >= 1 attaches to a uniform earlier vertex.
pub fn random_tree(n: usize, seed: u64) -> Result<WeightedGraph, GraphGenError> {
    if n == 0 {
        return Err(GraphGenError::InvalidParam("random_tree requires n >= 1".into()));
    }
    let mut rng = rng_from(seed);
    let edges = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    unit(n, edges)
}

/// Random connected graph: a random recursive tree plus `extra` distinct
/// non-tree edges (or as many as fit).
pub fn random_graph(n: usize, extra: usize, seed: u64) -> Result<WeightedGraph, GraphGenError> {
    if n == 0 {
        return Err(GraphGenError::InvalidParam("random_graph requires n >= 1".into()));
    }
    let mut rng = rng_from(seed);
    let mut present = std::collections::BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        present.insert((u, v));
    }
    let max_edges = n * (n - 1) / 2;
    let want = (present.len() + extra).min(max_edges);
    let mut guard = 0;
    while present.len() < want && guard < 100 * max_edges {
        guard += 1;
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            present.insert((u.min(v), u.max(v)));
        }
    }
    unit(n, present.into_iter().collect())
}

/// Random weighted tree on n vertices rooted at 0, weights uniform in
/// [0.5, 2.0). Used as test corpus for the tree embedding machinery.
pub fn random_weighted_tree(n: usize, seed: u64) -> Result<WeightedTree, TreeError> {
    let mut rng = rng_from(seed);
    let mut parent = vec![0usize; n];
    let mut weight = vec![0.0f64; n];
    for v in 1..n {
        parent[v] = rng.gen_range(0..v);
        weight[v] = rng.gen_range(0.5..2.0);
    }
    WeightedTree::new(0, parent, weight)
}

/// Random subset of `0..n` of the given size.
pub fn random_subset(n: usize, size: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(size.min(n));
    all.sort_unstable();
    all
}

/// Parses the line-oriented graph format: first line `n m`, then m lines
/// `u v w` with decimal weights.
pub fn read_graph<R: BufRead>(reader: R) -> Result<WeightedGraph, GraphGenError> {
    let mut lines = reader.lines().enumerate();
    let (n, m) = loop {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| GraphGenError::Parse { line: 0, msg: "empty input".into() })?;
        let line = line?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 2 {
            return Err(GraphGenError::Parse {
                line: lineno + 1,
                msg: format!("expected 'n m', got {line:?}"),
            });
        }
        let parse = |t: &str| {
            t.parse::<usize>().map_err(|e| GraphGenError::Parse {
                line: lineno + 1,
                msg: format!("bad integer {t:?}: {e}"),
            })
        };
        break (parse(tokens[0])?, parse(tokens[1])?);
    };
    let mut edges = Vec::with_capacity(m);
    for (lineno, line) in lines {
        let line = line?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 3 {
            return Err(GraphGenError::Parse {
                line: lineno + 1,
                msg: format!("expected 'u v w', got {line:?}"),
            });
        }
        let u = tokens[0].parse::<usize>().map_err(|e| GraphGenError::Parse {
            line: lineno + 1,
            msg: format!("bad vertex {:?}: {e}", tokens[0]),
        })?;
        let v = tokens[1].parse::<usize>().map_err(|e| GraphGenError::Parse {
            line: lineno + 1,
            msg: format!("bad vertex {:?}: {e}", tokens[1]),
        })?;
        let w = tokens[2].parse::<f64>().map_err(|e| GraphGenError::Parse {
            line: lineno + 1,
            msg: format!("bad weight {:?}: {e}", tokens[2]),
        })?;
        edges.push((u, v, w));
        if edges.len() == m {
            break;
        }
    }
    if edges.len() != m {
        return Err(GraphGenError::Parse {
            line: 0,
            msg: format!("expected {m} edges, found {}", edges.len()),
        });
    }
    Ok(WeightedGraph::new(n, edges)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_sizes() {
        assert_eq!(cycle(4).unwrap().edges().len(), 4);
        let g = grid(3, 2).unwrap();
        assert_eq!(g.n(), 9);
        assert_eq!(g.edges().len(), 12);
        let d1 = diamond(1).unwrap();
        assert_eq!(d1.n(), 4);
        assert_eq!(d1.edges().len(), 4);
        let t = torus(4, 2).unwrap();
        assert_eq!(t.n(), 16);
        assert_eq!(t.edges().len(), 32);
    }

    #[test]
    fn grid_metric_is_l1() {
        let g = grid(4, 2).unwrap();
        let m = crate::metric::shortest_path_metric(&g);
        for i in 0..16usize {
            for j in 0..16usize {
                let (xi, yi) = (i / 4, i % 4);
                let (xj, yj) = (j / 4, j % 4);
                let l1 = (xi.abs_diff(xj) + yi.abs_diff(yj)) as f64;
                assert_eq!(m.dist(i, j), l1);
            }
        }
    }

    #[test]
    fn random_families_connected_and_deterministic() {
        let a = random_graph(12, 6, 7).unwrap();
        let b = random_graph(12, 6, 7).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert!(random_tree(9, 3).unwrap().is_tree());
    }

    #[test]
    fn parses_graph_file() {
        let text = "3 2\n0 1 1.0\n1 2 2.5\n";
        let g = read_graph(std::io::Cursor::new(text)).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges()[1], (1, 2, 2.5));
    }

    #[test]
    fn rejects_malformed_file() {
        assert!(read_graph(std::io::Cursor::new("3\n")).is_err());
        assert!(read_graph(std::io::Cursor::new("2 1\n0 x 1\n")).is_err());
    }
}
