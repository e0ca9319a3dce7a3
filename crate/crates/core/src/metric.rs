//! Finite metric spaces from weighted graphs, metric validation, and
//! distortion measurement.

use std::collections::BinaryHeap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::DEFAULT_TOL;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("graph has a self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0},{1}) has non-positive weight {2}")]
    NonPositiveWeight(usize, usize, f64),
    #[error("edge ({0},{1}) references a vertex out of range (n={2})")]
    VertexOutOfRange(usize, usize, usize),
    #[error("graph is disconnected: no path between {0} and {1}")]
    Disconnected(usize, usize),
    #[error("empty graph (n must be at least 1)")]
    Empty,
    #[error("distance table is not square: row {0} has length {1}, expected {2}")]
    RaggedTable(usize, usize, usize),
    #[error("empty pair list")]
    EmptyPairList,
    #[error("pair {0} has non-positive source distance {1}")]
    ZeroSourceDistance(usize, f64),
}

/// Undirected graph with positive edge weights, connected by construction.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    /// Validates: no self-loops, no duplicate undirected edges, weights > 0,
    /// and connectivity (an unreachable pair is named otherwise).
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self, MetricError> {
        if n == 0 {
            return Err(MetricError::Empty);
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(u, v, w) in &edges {
            if u >= n || v >= n {
                return Err(MetricError::VertexOutOfRange(u, v, n));
            }
            if u == v {
                return Err(MetricError::SelfLoop(u));
            }
            if !(w > 0.0) {
                return Err(MetricError::NonPositiveWeight(u, v, w));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(MetricError::DuplicateEdge(u, v));
            }
        }
        let g = WeightedGraph { n, edges };
        let reach = g.reachable_from(0);
        if let Some(v) = (0..n).find(|v| !reach[*v]) {
            return Err(MetricError::Disconnected(0, v));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn is_unit_weight(&self) -> bool {
        self.edges.iter().all(|&(_, _, w)| w == 1.0)
    }

    /// n == m + 1 for a connected graph means it is a tree.
    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.n
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, w) in &self.edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        adj
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// Finite point set with a stored distance table.
///
/// The table is not revalidated on construction; [`MetricSpace::validate`]
/// reports violations so that broken tables can be inspected rather than
/// rejected.
#[derive(Debug, Clone)]
pub struct MetricSpace {
    n: usize,
    dist: Vec<f64>,
}

/// A named failure of one of the metric axioms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MetricViolation {
    NonZeroDiagonal { i: usize, value: f64 },
    Asymmetry { i: usize, j: usize, dij: f64, dji: f64 },
    NonPositive { i: usize, j: usize, value: f64 },
    Triangle { i: usize, j: usize, k: usize, direct: f64, via: f64 },
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricViolation::NonZeroDiagonal { i, value } => {
                write!(f, "d({i},{i}) = {value} != 0")
            }
            MetricViolation::Asymmetry { i, j, dij, dji } => {
                write!(f, "d({i},{j}) = {dij} but d({j},{i}) = {dji}")
            }
            MetricViolation::NonPositive { i, j, value } => {
                write!(f, "d({i},{j}) = {value} <= 0 for distinct points")
            }
            MetricViolation::Triangle { i, j, k, direct, via } => {
                write!(f, "d({i},{k}) = {direct} > d({i},{j}) + d({j},{k}) = {via}")
            }
        }
    }
}

impl MetricSpace {
    pub fn from_table(table: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let n = table.len();
        if n == 0 {
            return Err(MetricError::Empty);
        }
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::RaggedTable(i, row.len(), n));
            }
            dist.extend_from_slice(row);
        }
        Ok(MetricSpace { n, dist })
    }

    /// Builds the metric directly from a distance function.
    pub fn from_fn(n: usize, d: impl Fn(usize, usize) -> f64) -> Result<Self, MetricError> {
        if n == 0 {
            return Err(MetricError::Empty);
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = d(i, j);
            }
        }
        Ok(MetricSpace { n, dist })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn min_positive_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = self.dist(i, j);
                if d > 0.0 && best.map_or(true, |b| d < b) {
                    best = Some(d);
                }
            }
        }
        best
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                best = best.max(self.dist(i, j));
            }
        }
        best
    }

    /// Reports all axiom violations at tolerance `tol`; empty iff the table
    /// is a genuine metric. Never fails.
    pub fn validate(&self, tol: f64) -> Vec<MetricViolation> {
        let mut out = Vec::new();
        let n = self.n;
        for i in 0..n {
            if self.dist(i, i).abs() > tol {
                out.push(MetricViolation::NonZeroDiagonal { i, value: self.dist(i, i) });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let dij = self.dist(i, j);
                let dji = self.dist(j, i);
                if (dij - dji).abs() > tol {
                    out.push(MetricViolation::Asymmetry { i, j, dij, dji });
                }
                if dij <= tol {
                    out.push(MetricViolation::NonPositive { i, j, value: dij });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let direct = self.dist(i, k);
                    let via = self.dist(i, j) + self.dist(j, k);
                    if direct > via + tol {
                        out.push(MetricViolation::Triangle { i, j, k, direct, via });
                    }
                }
            }
        }
        out
    }
}

/// Shortest-path metric of a connected weighted graph, by single-source
/// relaxation (Dijkstra) from every vertex. Exact at desk scale.
pub fn shortest_path_metric(g: &WeightedGraph) -> MetricSpace {
    let n = g.n();
    let adj = g.adjacency();
    let mut dist = vec![f64::INFINITY; n * n];
    for src in 0..n {
        let row = &mut dist[src * n..(src + 1) * n];
        row[src] = 0.0;
        // BinaryHeap over bit-ordered f64 keys; all weights positive.
        let mut heap = BinaryHeap::new();
        heap.push((std::cmp::Reverse(0u64), src));
        while let Some((std::cmp::Reverse(bits), u)) = heap.pop() {
            let du = f64::from_bits(bits);
            if du > row[u] {
                continue;
            }
            for &(v, w) in &adj[u] {
                let dv = du + w;
                if dv < row[v] {
                    row[v] = dv;
                    heap.push((std::cmp::Reverse(dv.to_bits()), v));
                }
            }
        }
    }
    debug_assert!(dist.iter().all(|d| d.is_finite()));
    MetricSpace { n, dist }
}

/// Convenience: `validate` with the crate default tolerance.
pub fn validate_metric(m: &MetricSpace) -> Vec<MetricViolation> {
    m.validate(DEFAULT_TOL)
}

/// Worst expansion, worst contraction, and their product for a list of
/// (source distance, target distance) pairs. Witnesses are indices into
/// the input slice. Scale-free: rescaling all targets by c > 0 leaves
/// `distortion` unchanged.
#[derive(Debug, Clone, Serialize)]
pub struct DistortionReport {
    pub expansion: f64,
    pub contraction: f64,
    pub distortion: f64,
    pub expansion_witness: usize,
    pub contraction_witness: usize,
}

pub fn measure_distortion(samples: &[(f64, f64)]) -> Result<DistortionReport, MetricError> {
    if samples.is_empty() {
        return Err(MetricError::EmptyPairList);
    }
    let mut expansion = f64::NEG_INFINITY;
    let mut contraction = f64::NEG_INFINITY;
    let mut ew = 0;
    let mut cw = 0;
    for (idx, &(source, target)) in samples.iter().enumerate() {
        if !(source > 0.0) {
            return Err(MetricError::ZeroSourceDistance(idx, source));
        }
        let e = target / source;
        if e > expansion {
            expansion = e;
            ew = idx;
        }
        // target == 0 collapses the pair: contraction is reported as infinite.
        let c = if target > 0.0 { source / target } else { f64::INFINITY };
        if c > contraction {
            contraction = c;
            cw = idx;
        }
    }
    Ok(DistortionReport {
        expansion,
        contraction,
        distortion: expansion * contraction,
        expansion_witness: ew,
        contraction_witness: cw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> WeightedGraph {
        WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn path_graph_distances() {
        let m = shortest_path_metric(&path3());
        assert_eq!(m.dist(0, 2), 2.0);
        assert_eq!(m.dist(2, 0), 2.0);
        assert_eq!(m.dist(1, 1), 0.0);
    }

    #[test]
    fn single_vertex_metric() {
        let g = WeightedGraph::new(1, vec![]).unwrap();
        let m = shortest_path_metric(&g);
        assert_eq!(m.len(), 1);
        assert_eq!(m.dist(0, 0), 0.0);
    }

    #[test]
    fn heavy_edge_bypassed_on_cycle() {
        // 4-cycle, consecutive weights 1,1,1,5: endpoints of the weight-5
        // edge are at distance 3 the other way round. Expected value checked
        // by enumerating all simple paths on 4 vertices by hand.
        let g = WeightedGraph::new(
            4,
            vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 5.0)],
        )
        .unwrap();
        let m = shortest_path_metric(&g);
        assert_eq!(m.dist(3, 0), 3.0);
        assert_eq!(m.dist(0, 3), 3.0);
    }

    #[test]
    fn disconnected_graph_names_pair() {
        let err = WeightedGraph::new(3, vec![(0, 1, 1.0)]).unwrap_err();
        assert_eq!(err, MetricError::Disconnected(0, 2));
    }

    #[test]
    fn rejects_self_loop_duplicate_and_bad_weight() {
        assert!(matches!(
            WeightedGraph::new(2, vec![(0, 0, 1.0)]),
            Err(MetricError::SelfLoop(0))
        ));
        assert!(matches!(
            WeightedGraph::new(2, vec![(0, 1, 1.0), (1, 0, 2.0)]),
            Err(MetricError::DuplicateEdge(1, 0))
        ));
        assert!(matches!(
            WeightedGraph::new(2, vec![(0, 1, 0.0)]),
            Err(MetricError::NonPositiveWeight(0, 1, _))
        ));
    }

    #[test]
    fn shortest_path_metric_validates_empty() {
        let m = shortest_path_metric(&path3());
        assert!(validate_metric(&m).is_empty());
    }

    #[test]
    fn validate_reports_triangle_violation() {
        let m = MetricSpace::from_table(vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0],
        ])
        .unwrap();
        let violations = validate_metric(&m);
        assert!(violations
            .iter()
            .any(|v| matches!(v, MetricViolation::Triangle { i: 0, k: 2, .. })));
    }

    #[test]
    fn validate_reports_asymmetry() {
        let m = MetricSpace::from_table(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        let violations = validate_metric(&m);
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], MetricViolation::Asymmetry { i: 0, j: 1, .. }));
    }

    #[test]
    fn distortion_identity_and_scaling() {
        let samples: Vec<(f64, f64)> = vec![(1.0, 1.0), (2.5, 2.5)];
        let r = measure_distortion(&samples).unwrap();
        assert!((r.distortion - 1.0).abs() < 1e-12);

        let scaled: Vec<(f64, f64)> = samples.iter().map(|&(s, t)| (s, 3.0 * t)).collect();
        let r = measure_distortion(&scaled).unwrap();
        assert!((r.distortion - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distortion_mixed_ratios() {
        // ratios 2 and 1/2: expansion 2, contraction 2, distortion 4
        let r = measure_distortion(&[(1.0, 2.0), (2.0, 1.0)]).unwrap();
        assert_eq!(r.expansion, 2.0);
        assert_eq!(r.contraction, 2.0);
        assert_eq!(r.distortion, 4.0);
        assert_eq!(r.expansion_witness, 0);
        assert_eq!(r.contraction_witness, 1);
    }

    #[test]
    fn distortion_errors() {
        assert!(matches!(measure_distortion(&[]), Err(MetricError::EmptyPairList)));
        assert!(matches!(
            measure_distortion(&[(0.0, 1.0)]),
            Err(MetricError::ZeroSourceDistance(0, _))
        ));
    }

    #[test]
    fn edge_distance_at_most_weight() {
        let g = WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)]).unwrap();
        let m = shortest_path_metric(&g);
        for &(u, v, w) in g.edges() {
            assert!(m.dist(u, v) <= w + 1e-12);
        }
        // the non-reduced edge is strictly shortcut
        assert_eq!(m.dist(0, 2), 2.0);
    }
}
