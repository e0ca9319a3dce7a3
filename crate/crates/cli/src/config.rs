//! Experiment configuration: graph family, embedder, pair policy, seeds.
//! Everything is explicit — no environment variables — so a config value
//! pins a run completely.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Path,
    Cycle,
    Grid,
    Torus,
    Diamond,
    RandomTree,
    RandomGraph,
    Complete,
    File,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Path => "path",
            Family::Cycle => "cycle",
            Family::Grid => "grid",
            Family::Torus => "torus",
            Family::Diamond => "diamond",
            Family::RandomTree => "random_tree",
            Family::RandomGraph => "random_graph",
            Family::Complete => "complete",
            Family::File => "file",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "path" => Ok(Family::Path),
            "cycle" => Ok(Family::Cycle),
            "grid" => Ok(Family::Grid),
            "torus" => Ok(Family::Torus),
            "diamond" => Ok(Family::Diamond),
            "random_tree" => Ok(Family::RandomTree),
            "random_graph" => Ok(Family::RandomGraph),
            "complete" => Ok(Family::Complete),
            "file" => Ok(Family::File),
            other => Err(format!("unknown family {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedder {
    Frt,
    Karp,
    IdentityTree,
}

impl fmt::Display for Embedder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Embedder::Frt => "frt",
            Embedder::Karp => "karp",
            Embedder::IdentityTree => "identity_tree",
        };
        f.write_str(s)
    }
}

impl FromStr for Embedder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frt" => Ok(Embedder::Frt),
            "karp" => Ok(Embedder::Karp),
            "identity_tree" => Ok(Embedder::IdentityTree),
            other => Err(format!("unknown embedder {other:?}")),
        }
    }
}

/// Which lamplighter pairs a distortion run evaluates.
///
/// `Exhaustive` means every pair of configurations with at most two lamps;
/// `Sampled` draws seeded random pairs with a bounded symmetric difference.
/// Serialized in the flag syntax: `exhaustive` or `sampled:<count>:<maxsd>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PairPolicy {
    Exhaustive,
    Sampled { count: usize, max_symmdiff: usize },
}

impl From<PairPolicy> for String {
    fn from(p: PairPolicy) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PairPolicy {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl fmt::Display for PairPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairPolicy::Exhaustive => f.write_str("exhaustive"),
            PairPolicy::Sampled { count, max_symmdiff } => {
                write!(f, "sampled:{count}:{max_symmdiff}")
            }
        }
    }
}

impl FromStr for PairPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "exhaustive" {
            return Ok(PairPolicy::Exhaustive);
        }
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 && parts[0] == "sampled" {
            let count = parts[1].parse().map_err(|e| format!("bad pair count: {e}"))?;
            let max_symmdiff =
                parts[2].parse().map_err(|e| format!("bad max symmdiff: {e}"))?;
            return Ok(PairPolicy::Sampled { count, max_symmdiff });
        }
        Err(format!("expected 'exhaustive' or 'sampled:<count>:<max_symmdiff>', got {s:?}"))
    }
}

fn default_samples() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// One distortion experiment: family → metric → embedder → checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub family: Family,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    /// Extra edges for random_graph.
    #[serde(default)]
    pub k: Option<usize>,
    /// Recursion level for diamond.
    #[serde(default)]
    pub level: Option<usize>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    pub embedder: Embedder,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: u64,
    pub pair_policy: PairPolicy,
    /// Run the lifting-inequality checks alongside the distortion run.
    #[serde(default = "default_true")]
    pub lifting_checks: bool,
    /// Run the free-space suite (transport norms, lifted norms, dipoles).
    #[serde(default)]
    pub freespace: bool,
    /// Molecules for the free-space suite.
    #[serde(default)]
    pub molecules: Option<usize>,
}

impl ExperimentConfig {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let mut parts = vec![self.family.to_string()];
            if let Some(n) = self.n {
                parts.push(format!("n{n}"));
            }
            if let Some(d) = self.d {
                parts.push(format!("d{d}"));
            }
            if let Some(level) = self.level {
                parts.push(format!("l{level}"));
            }
            parts.push(self.embedder.to_string());
            parts.push(format!("s{}", self.seed));
            parts.join("-")
        })
    }

    /// Structural checks the spec pins: karp needs a cycle, identity_tree a
    /// tree family, samples at least one.
    pub fn validate(&self) -> Result<(), String> {
        if self.samples == 0 {
            return Err("samples must be >= 1".into());
        }
        if self.embedder == Embedder::Karp && self.family != Family::Cycle {
            return Err("karp embedder requires family=cycle".into());
        }
        if self.embedder == Embedder::IdentityTree
            && !matches!(self.family, Family::Path | Family::RandomTree | Family::File)
        {
            return Err("identity_tree embedder requires a tree family (path, random_tree, or a tree file)".into());
        }
        if self.family == Family::File && self.path.is_none() {
            return Err("family=file requires a path".into());
        }
        Ok(())
    }
}

/// Folding / coarse-embedding check configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Box side for the fold (the spec's n).
    pub fold_n: i64,
    pub d: usize,
    pub seed: u64,
    /// Sampled pairs per randomized check.
    #[serde(default)]
    pub pairs: Option<usize>,
    /// Window radius for sampled lattice points.
    #[serde(default)]
    pub window: Option<i64>,
    /// Levels of the truncated coarse embedding (0 = skip).
    #[serde(default)]
    pub coarse_levels: u32,
    #[serde(default)]
    pub coarse_samples: Option<usize>,
    /// Translate subsample size (exhaustive when absent).
    #[serde(default)]
    pub coarse_translates: Option<usize>,
}

impl FoldConfig {
    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("fold-n{}-d{}-s{}", self.fold_n, self.d, self.seed))
    }
}

/// A suite is a list of experiment and fold entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SuiteEntry {
    Experiment(ExperimentConfig),
    Fold(FoldConfig),
}
