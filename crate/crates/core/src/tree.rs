//! Rooted weighted trees, the closed-form tree TSP, and the explicit ℓ₁
//! embedding of travelling-salesman configurations over a tree.
//!
//! The embedding stores only touched coordinates: a coordinate key carries
//! the edge and the canonical lamp set that indexes it, so two
//! configurations collide on a coordinate exactly when their index pairs
//! coincide. The full index set is never materialized.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::tsp::LamplighterPoint;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("tree must have at least one vertex")]
    Empty,
    #[error("root {0} out of range (n={1})")]
    RootOutOfRange(usize, usize),
    #[error("parent array length {0} does not match weight array length {1}")]
    LengthMismatch(usize, usize),
    #[error("parent of root {0} must be itself")]
    BadRoot(usize),
    #[error("parent link cycle through vertex {0}")]
    Cycle(usize),
    #[error("vertex {0} has non-positive edge weight {1}")]
    NonPositiveWeight(usize, f64),
    #[error("parent {1} of vertex {0} out of range")]
    ParentOutOfRange(usize, usize),
    #[error("graph is not a tree (n={0}, m={1})")]
    NotATree(usize, usize),
}

/// Edge of a rooted tree, identified by its child endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EdgeId(pub usize);

/// Rooted tree with a positive weight on each child→parent edge.
#[derive(Debug, Clone)]
pub struct WeightedTree {
    root: usize,
    parent: Vec<usize>,
    weight: Vec<f64>,
    depth: Vec<u32>,
    dist_root: Vec<f64>,
}

impl WeightedTree {
    /// `parent[root]` must equal `root`; `weight[v]` is the weight of the
    /// edge from `v` to its parent (ignored at the root).
    pub fn new(root: usize, parent: Vec<usize>, weight: Vec<f64>) -> Result<Self, TreeError> {
        let n = parent.len();
        if n == 0 {
            return Err(TreeError::Empty);
        }
        if weight.len() != n {
            return Err(TreeError::LengthMismatch(n, weight.len()));
        }
        if root >= n {
            return Err(TreeError::RootOutOfRange(root, n));
        }
        if parent[root] != root {
            return Err(TreeError::BadRoot(root));
        }
        for v in 0..n {
            if parent[v] >= n {
                return Err(TreeError::ParentOutOfRange(v, parent[v]));
            }
            if v != root && !(weight[v] > 0.0) {
                return Err(TreeError::NonPositiveWeight(v, weight[v]));
            }
        }
        let mut depth = vec![u32::MAX; n];
        let mut dist_root = vec![f64::NAN; n];
        depth[root] = 0;
        dist_root[root] = 0.0;
        for v in 0..n {
            // walk up to the first resolved ancestor, then unwind
            let mut chain = Vec::new();
            let mut cur = v;
            while depth[cur] == u32::MAX {
                chain.push(cur);
                cur = parent[cur];
                if chain.len() > n {
                    return Err(TreeError::Cycle(v));
                }
            }
            for &u in chain.iter().rev() {
                depth[u] = depth[parent[u]] + 1;
                dist_root[u] = dist_root[parent[u]] + weight[u];
            }
        }
        Ok(WeightedTree { root, parent, weight, depth, dist_root })
    }

    /// Unit-weight tree from a connected graph with n−1 edges, rooted at
    /// `root`, keeping the graph's vertex ids.
    pub fn from_tree_graph(
        g: &crate::metric::WeightedGraph,
        root: usize,
    ) -> Result<Self, TreeError> {
        let n = g.n();
        if !g.is_tree() {
            return Err(TreeError::NotATree(n, g.edges().len()));
        }
        if root >= n {
            return Err(TreeError::RootOutOfRange(root, n));
        }
        let adj = g.adjacency();
        let mut parent = vec![usize::MAX; n];
        let mut weight = vec![0.0; n];
        parent[root] = root;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &(v, w) in &adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    weight[v] = w;
                    stack.push(v);
                }
            }
        }
        WeightedTree::new(root, parent, weight)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> usize {
        self.parent[v]
    }

    pub fn edge_weight(&self, e: EdgeId) -> f64 {
        self.weight[e.0]
    }

    pub fn depth(&self, v: usize) -> u32 {
        self.depth[v]
    }

    fn lca(&self, mut x: usize, mut y: usize) -> usize {
        while self.depth[x] > self.depth[y] {
            x = self.parent[x];
        }
        while self.depth[y] > self.depth[x] {
            y = self.parent[y];
        }
        while x != y {
            x = self.parent[x];
            y = self.parent[y];
        }
        x
    }

    /// Tree metric between two vertices.
    pub fn distance(&self, x: usize, y: usize) -> f64 {
        let a = self.lca(x, y);
        self.dist_root[x] + self.dist_root[y] - 2.0 * self.dist_root[a]
    }

    /// Edge set of the unique path between `x` and `y`; empty iff x == y.
    pub fn path_edges(&self, x: usize, y: usize) -> BTreeSet<EdgeId> {
        let a = self.lca(x, y);
        let mut edges = BTreeSet::new();
        let mut cur = x;
        while cur != a {
            edges.insert(EdgeId(cur));
            cur = self.parent[cur];
        }
        let mut cur = y;
        while cur != a {
            edges.insert(EdgeId(cur));
            cur = self.parent[cur];
        }
        edges
    }

    /// Union of the path edge sets from `x` to every point of `set`.
    pub fn steiner_edges(&self, x: usize, set: &BTreeSet<usize>) -> BTreeSet<EdgeId> {
        let mut edges = BTreeSet::new();
        for &a in set {
            edges.extend(self.path_edges(x, a));
        }
        edges
    }

    /// Minimal edge set needed to travel between the vertices of `set`.
    pub fn spanning_edges(&self, set: &BTreeSet<usize>) -> BTreeSet<EdgeId> {
        let mut edges = BTreeSet::new();
        let mut it = set.iter();
        if let Some(&first) = it.next() {
            for &v in it {
                edges.extend(self.path_edges(first, v));
            }
        }
        edges
    }

    fn weight_sum<'a>(&self, edges: impl IntoIterator<Item = &'a EdgeId>) -> f64 {
        edges.into_iter().map(|e| self.weight[e.0]).sum()
    }
}

/// Closed-form tree TSP: twice the excursion edges plus the direct path,
/// tsp(x, A, y) = 2·Σ_{e ∈ [x,A]∖[x,y]} w_e + Σ_{e ∈ [x,y]} w_e.
pub fn tsp_tree(t: &WeightedTree, x: usize, set: &BTreeSet<usize>, y: usize) -> f64 {
    let direct = t.path_edges(x, y);
    let reach = t.steiner_edges(x, set);
    let excursion: f64 = t.weight_sum(reach.difference(&direct));
    2.0 * excursion + t.weight_sum(&direct)
}

/// τ over a tree: tsp through the symmetric difference of the lamp sets.
pub fn tau_tree(t: &WeightedTree, u: &LamplighterPoint, v: &LamplighterPoint) -> f64 {
    tsp_tree(t, u.pos, &u.symm_diff(v), v.pos)
}

/// Coordinate key of a sparse ℓ₁ vector. Keys carry enough identity that
/// two embedded configurations share a coordinate exactly when the
/// underlying index pairs coincide; `Scaled` namespaces per-component
/// blocks of a direct sum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CoordKey {
    /// (edge, canonical lamp set reaching through it) — the f-block of the
    /// tree embedding.
    Tsp { edge: EdgeId, lamps: Vec<usize> },
    /// Root-path block coordinate for one tree edge.
    RootPath { edge: EdgeId },
    /// Indicator coordinate of one lit lamp.
    Lamp { point: usize },
    /// Subtree-cut coordinate of the tree free space.
    EdgeCut { edge: EdgeId },
    /// Per-component namespace tag of a direct sum.
    Scaled { tag: u64, inner: Box<CoordKey> },
}

impl CoordKey {
    pub fn tsp(edge: EdgeId, lamps: &BTreeSet<usize>) -> Self {
        CoordKey::Tsp { edge, lamps: lamps.iter().copied().collect() }
    }

    pub fn scaled(tag: u64, inner: CoordKey) -> Self {
        CoordKey::Scaled { tag, inner: Box::new(inner) }
    }
}

/// Finitely supported vector with explicit coordinates; no zero entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: BTreeMap<CoordKey, f64>,
}

impl SparseVector {
    pub fn new() -> Self {
        SparseVector::default()
    }

    pub fn insert(&mut self, key: CoordKey, value: f64) {
        if value != 0.0 {
            self.entries.insert(key, value);
        }
    }

    pub fn add(&mut self, key: CoordKey, value: f64) {
        use std::collections::btree_map::Entry;
        match self.entries.entry(key) {
            Entry::Vacant(e) => {
                if value != 0.0 {
                    e.insert(value);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += value;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &CoordKey) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CoordKey, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.values().map(|v| v.abs()).sum()
    }

    /// ‖self − other‖₁ by merging the two sorted coordinate streams.
    pub fn l1_distance(&self, other: &SparseVector) -> f64 {
        let mut a = self.entries.iter().peekable();
        let mut b = other.entries.iter().peekable();
        let mut total = 0.0;
        loop {
            match (a.peek(), b.peek()) {
                (Some((ka, va)), Some((kb, vb))) => match ka.cmp(kb) {
                    std::cmp::Ordering::Less => {
                        total += va.abs();
                        a.next();
                    }
                    std::cmp::Ordering::Greater => {
                        total += vb.abs();
                        b.next();
                    }
                    std::cmp::Ordering::Equal => {
                        total += (*va - *vb).abs();
                        a.next();
                        b.next();
                    }
                },
                (Some((_, va)), None) => {
                    total += va.abs();
                    a.next();
                }
                (None, Some((_, vb))) => {
                    total += vb.abs();
                    b.next();
                }
                (None, None) => break,
            }
        }
        total
    }

    /// Appends `other` scaled by `factor` under the `Scaled(tag, ·)`
    /// namespace.
    pub fn extend_scaled(&mut self, tag: u64, other: &SparseVector, factor: f64) {
        for (k, v) in other.iter() {
            self.insert(CoordKey::scaled(tag, k.clone()), factor * v);
        }
    }

    pub fn scaled_by(&self, factor: f64) -> SparseVector {
        let mut out = SparseVector::new();
        for (k, v) in self.iter() {
            out.insert(k.clone(), factor * v);
        }
        out
    }

    pub fn difference(&self, other: &SparseVector) -> SparseVector {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.add(k.clone(), -v);
        }
        out
    }
}

impl FromIterator<(CoordKey, f64)> for SparseVector {
    fn from_iter<I: IntoIterator<Item = (CoordKey, f64)>>(iter: I) -> Self {
        let mut v = SparseVector::new();
        for (k, val) in iter {
            v.insert(k, val);
        }
        v
    }
}

/// The explicit ℓ₁ embedding of a lamp configuration over a rooted tree:
/// for every edge e with a nonempty lamp set A_{x,e} = {a ∈ A : e ∈ [x,a]},
/// the coordinate (e, A_{x,e}) holds w_e, and every edge on the root path
/// [r,x] holds w_e in its own block.
pub fn embed_ts_tree(t: &WeightedTree, p: &LamplighterPoint) -> SparseVector {
    let mut lamp_sets: BTreeMap<EdgeId, BTreeSet<usize>> = BTreeMap::new();
    for &a in &p.lamps {
        for e in t.path_edges(p.pos, a) {
            lamp_sets.entry(e).or_default().insert(a);
        }
    }
    let mut out = SparseVector::new();
    for (edge, lamps) in lamp_sets {
        debug_assert!(
            !t.spanning_edges(&lamps).contains(&edge),
            "index invariant: edge must lie outside the span of its lamp set"
        );
        out.insert(CoordKey::tsp(edge, &lamps), t.edge_weight(edge));
    }
    for edge in t.path_edges(t.root, p.pos) {
        out.insert(CoordKey::RootPath { edge }, t.edge_weight(edge));
    }
    out
}

/// The f-block alone (no root-path block); the object inequality (6)-style
/// sandwich bounds speak about.
pub fn embed_ts_tree_f_block(t: &WeightedTree, p: &LamplighterPoint) -> SparseVector {
    let mut out = embed_ts_tree(t, p);
    let root_keys: Vec<CoordKey> = out
        .iter()
        .filter(|(k, _)| matches!(k, CoordKey::RootPath { .. }))
        .map(|(k, _)| k.clone())
        .collect();
    for k in root_keys {
        out.entries.remove(&k);
    }
    out
}
