//! Lamplighter metrics over finite metric spaces and their embeddings into ℓ₁.
//!
//! The crate computes travelling-salesman semi-metrics and lamplighter
//! distances exactly, builds stochastic embeddings into dominating tree
//! metrics (FRT-style hierarchical decompositions, Karp's cycle-edge
//! deletion), lifts them to lamplighter level, composes with the explicit
//! ℓ₁ embedding for trees, and measures every distortion along the way.
//! Free-space (optimal transport) norms and the lattice folding machinery
//! round out the toolkit. Everything is deterministic given explicit seeds
//! and sized for exhaustive verification rather than throughput.

pub mod folding;
pub mod free_space;
pub mod graphs;
pub mod lifting;
pub mod metric;
pub mod rng;
pub mod sampling;
pub mod stochastic;
pub mod tree;
pub mod tsp;

/// Absolute tolerance used by equality assertions on accumulated distances.
pub const DEFAULT_TOL: f64 = 1e-9;

pub use metric::{DistortionReport, MetricSpace, MetricViolation, WeightedGraph};
pub use tree::{CoordKey, EdgeId, SparseVector, WeightedTree};
pub use tsp::{LamplighterPoint, TspInstance};
