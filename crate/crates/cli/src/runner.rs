//! Builds metrics and embedders from configs, runs every check, and
//! assembles report rows. All randomness flows from the config seed through
//! named substreams, so identical configs produce identical rows.

use std::collections::BTreeSet;

use lamplighter_core::folding::{
    fold_lattice, fold_set, fold_ts, tau_lattice, tsp_lattice, CoarseEmbedder, LatticePoint,
    LatticeTsPoint, LatticeWindow, TranslateMode,
};
use lamplighter_core::free_space::{lf_l1_embedding, lf_norm, lf_norm_tree, lift_molecule, Molecule};
use lamplighter_core::graphs;
use lamplighter_core::lifting::{pipeline_distortion, verify_lifting};
use lamplighter_core::metric::{shortest_path_metric, MetricSpace, WeightedGraph};
use lamplighter_core::rng::{derive_seed, rng_from};
use lamplighter_core::sampling;
use lamplighter_core::stochastic::{
    expected_stretch, frt_ensemble, karp_cycle_embedding, verify_domination, StochasticEmbedding,
    TreeEmbedding,
};
use lamplighter_core::tree::WeightedTree;
use lamplighter_core::tsp::{LamplighterPoint, DEFAULT_TSP_CAP};
use lamplighter_core::DEFAULT_TOL;
use rand::Rng;

use crate::config::{Embedder, ExperimentConfig, Family, FoldConfig, PairPolicy, SuiteEntry};
use crate::report::{
    CoarseLevelSummary, CoarseSummary, FoldSummary, FreespaceSummary, Report, ReportRow,
    WitnessPair, SCHEMA_VERSION,
};

/// End-to-end distortion is compared against 6·D with this slack.
pub const DISTORTION_TOL: f64 = 1e-6;

// seed substreams
const STREAM_GRAPH: u64 = 0;
const STREAM_ENSEMBLE: u64 = 1;
const STREAM_PAIRS: u64 = 2;
const STREAM_MOLECULES: u64 = 3;

#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Failed(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Usage(m) => write!(f, "usage error: {m}"),
            RunError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for RunError {}

fn usage(msg: impl Into<String>) -> RunError {
    RunError::Usage(msg.into())
}

fn internal(e: impl std::fmt::Display) -> RunError {
    RunError::Failed(e.to_string())
}

/// Canonical graph of the configured family.
pub fn generate(cfg: &ExperimentConfig) -> Result<WeightedGraph, RunError> {
    let need_n = || cfg.n.ok_or_else(|| usage(format!("family {} requires --n", cfg.family)));
    let graph_seed = derive_seed(cfg.seed, STREAM_GRAPH);
    let g = match cfg.family {
        Family::Path => graphs::path(need_n()?),
        Family::Cycle => graphs::cycle(need_n()?),
        Family::Grid => graphs::grid(need_n()?, cfg.d.unwrap_or(2)),
        Family::Torus => graphs::torus(need_n()?, cfg.d.unwrap_or(2)),
        Family::Diamond => graphs::diamond(
            cfg.level.ok_or_else(|| usage("family diamond requires --k (level)"))?,
        ),
        Family::RandomTree => graphs::random_tree(need_n()?, graph_seed),
        Family::RandomGraph => {
            let n = need_n()?;
            graphs::random_graph(n, cfg.k.unwrap_or(n), graph_seed)
        }
        Family::Complete => graphs::complete(need_n()?),
        Family::File => {
            let path = cfg.path.as_ref().ok_or_else(|| usage("family file requires a path"))?;
            let file = std::fs::File::open(path)
                .map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
            graphs::read_graph(std::io::BufReader::new(file))
        }
    };
    g.map_err(|e| usage(e.to_string()))
}

pub fn build_embedder(
    cfg: &ExperimentConfig,
    g: &WeightedGraph,
    m: &MetricSpace,
) -> Result<StochasticEmbedding, RunError> {
    match cfg.embedder {
        Embedder::Frt => {
            frt_ensemble(m, cfg.samples, derive_seed(cfg.seed, STREAM_ENSEMBLE))
                .map_err(internal)
        }
        Embedder::Karp => karp_cycle_embedding(g.n()).map_err(internal),
        Embedder::IdentityTree => {
            let tree = WeightedTree::from_tree_graph(g, 0).map_err(internal)?;
            let emb = TreeEmbedding::new(tree, (0..g.n()).collect(), m).map_err(internal)?;
            StochasticEmbedding::new(vec![(1.0, emb)]).map_err(internal)
        }
    }
}

pub fn pairs_for(
    policy: PairPolicy,
    n: usize,
    seed: u64,
) -> Vec<(LamplighterPoint, LamplighterPoint)> {
    match policy {
        PairPolicy::Exhaustive => sampling::exhaustive_pairs(n, 2),
        PairPolicy::Sampled { count, max_symmdiff } => {
            sampling::sampled_pairs(n, count, max_symmdiff, derive_seed(seed, STREAM_PAIRS))
        }
    }
}

fn blank_row(name: String, kind: &str, seed: u64) -> ReportRow {
    ReportRow {
        schema_version: SCHEMA_VERSION,
        name,
        kind: kind.to_string(),
        family: None,
        n: None,
        d: None,
        k: None,
        level: None,
        embedder: None,
        samples: None,
        seed,
        pair_policy: None,
        tsp_cap: DEFAULT_TSP_CAP,
        tolerance: DEFAULT_TOL,
        points: None,
        pairs: None,
        d_measured: None,
        stretch_witness: None,
        expansion: None,
        contraction: None,
        distortion: None,
        distortion_bound: None,
        expansion_witness: None,
        contraction_witness: None,
        domination_violations: None,
        lifting_violations: None,
        freespace: None,
        fold: None,
        passed: true,
        failures: Vec::new(),
    }
}

/// Embedder construction and its immediate checks only: domination and
/// expected stretch, no pairwise pipeline work.
pub fn run_embed(cfg: &ExperimentConfig) -> Result<ReportRow, RunError> {
    cfg.validate().map_err(usage)?;
    let g = generate(cfg)?;
    let m = shortest_path_metric(&g);
    let se = build_embedder(cfg, &g, &m)?;
    let mut row = blank_row(cfg.display_name(), "embed", cfg.seed);
    row.family = Some(cfg.family.to_string());
    row.n = cfg.n;
    row.d = cfg.d;
    row.k = cfg.k;
    row.level = cfg.level;
    row.embedder = Some(cfg.embedder.to_string());
    row.samples = Some(cfg.samples);
    row.points = Some(m.len());
    let domination = verify_domination(&se, &m);
    row.domination_violations = Some(domination.len());
    if !domination.is_empty() {
        row.failures.push(format!("domination failed {} times", domination.len()));
    }
    let (d_measured, witness) = expected_stretch(&se, &m);
    row.d_measured = Some(d_measured);
    row.stretch_witness = Some(witness);
    row.passed = row.failures.is_empty();
    Ok(row)
}

/// The full experiment pipeline: metric, embedder, domination, stretch,
/// lifting checks, end-to-end distortion, optional free-space suite.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportRow, RunError> {
    cfg.validate().map_err(usage)?;
    let g = generate(cfg)?;
    let m = shortest_path_metric(&g);
    let se = build_embedder(cfg, &g, &m)?;

    let mut row = blank_row(cfg.display_name(), "experiment", cfg.seed);
    row.family = Some(cfg.family.to_string());
    row.n = cfg.n;
    row.d = cfg.d;
    row.k = cfg.k;
    row.level = cfg.level;
    row.embedder = Some(cfg.embedder.to_string());
    row.samples = Some(cfg.samples);
    row.pair_policy = Some(cfg.pair_policy.to_string());
    row.points = Some(m.len());

    let domination = verify_domination(&se, &m);
    row.domination_violations = Some(domination.len());
    if !domination.is_empty() {
        row.failures.push(format!(
            "domination failed on {} component/pair combinations (first: {:?})",
            domination.len(),
            domination[0]
        ));
    }

    let (d_measured, witness) = expected_stretch(&se, &m);
    row.d_measured = Some(d_measured);
    row.stretch_witness = Some(witness);

    let pairs = pairs_for(cfg.pair_policy, m.len(), cfg.seed);
    row.pairs = Some(pairs.len());

    if cfg.lifting_checks {
        let lifting = verify_lifting(&se, &m, &pairs, d_measured).map_err(internal)?;
        row.lifting_violations = Some(lifting.len());
        if !lifting.is_empty() {
            row.failures.push(format!(
                "lifting inequalities failed on {} pairs (first: {:?})",
                lifting.len(),
                lifting[0]
            ));
        }
    }

    let report = pipeline_distortion(&se, &m, &pairs).map_err(internal)?;
    let bound = 6.0 * d_measured;
    row.expansion = Some(report.expansion);
    row.contraction = Some(report.contraction);
    row.distortion = Some(report.distortion);
    row.distortion_bound = Some(bound);
    let witness_of = |idx: usize| {
        let (u, v) = &pairs[idx];
        WitnessPair {
            u: u.clone(),
            v: v.clone(),
            source: lamplighter_core::tsp::lamplighter_distance(&m, u, v).unwrap_or(f64::NAN),
            target: f64::NAN,
        }
    };
    row.expansion_witness = Some(witness_of(report.expansion_witness));
    row.contraction_witness = Some(witness_of(report.contraction_witness));
    if report.distortion > bound + DISTORTION_TOL {
        row.failures.push(format!(
            "pipeline distortion {} exceeded 6·D = {bound}",
            report.distortion
        ));
    }

    if cfg.freespace {
        let molecules = cfg.molecules.unwrap_or(200);
        row.freespace = Some(freespace_suite(&se, &m, molecules, cfg.seed, &mut row.failures));
    }

    row.passed = row.failures.is_empty();
    Ok(row)
}

/// Free-space checks over one embedder: per-component lifted norms
/// dominate, their average respects D, the tree closed form matches the
/// flow solver on the lifted supports, and dipole distortion equals the
/// metric stochastic stretch.
fn freespace_suite(
    se: &StochasticEmbedding,
    m: &MetricSpace,
    molecules: usize,
    seed: u64,
    failures: &mut Vec<String>,
) -> FreespaceSummary {
    let mut rng = rng_from(derive_seed(seed, STREAM_MOLECULES));
    let (d_measured, _) = expected_stretch(se, m);
    let n = m.len();
    let mut domination_violations = 0usize;
    let mut averaged_violations = 0usize;
    let mut max_gap = 0.0f64;

    for _ in 0..molecules {
        let mu = Molecule::random(n, 6.min(n), &mut rng);
        let ground = match lf_norm(m, &mu) {
            Ok(v) => v,
            Err(e) => {
                failures.push(format!("transport solver failed: {e}"));
                continue;
            }
        };
        let mut averaged = 0.0;
        for (p, emb) in se.components() {
            let lifted = lift_molecule(emb, &mu);
            let (tree_norm, _) = lf_norm_tree(emb.tree(), &lifted).expect("lifted in range");
            averaged += p * tree_norm;
            if tree_norm + DEFAULT_TOL * ground.max(1.0) < ground {
                domination_violations += 1;
            }
            // cross-check the closed form against the flow solver on the
            // support's metric
            let support: Vec<usize> = lifted.support().map(|(v, _)| v).collect();
            if !support.is_empty() {
                let sub = MetricSpace::from_fn(support.len(), |i, j| {
                    emb.tree().distance(support[i], support[j])
                })
                .expect("nonempty support");
                let remapped = Molecule::new(
                    lifted.support().enumerate().map(|(i, (_, c))| (i, c)),
                )
                .expect("balanced");
                if let Ok(flow) = lf_norm(&sub, &remapped) {
                    max_gap = max_gap.max((flow - tree_norm).abs());
                }
            }
        }
        if averaged > d_measured * ground + DEFAULT_TOL * ground.max(1.0) {
            averaged_violations += 1;
        }
    }

    // dipoles realize the stochastic stretch exactly
    let mut dipole_distortion = 0.0f64;
    for p in 0..n {
        for q in (p + 1)..n {
            let image = lf_l1_embedding(se, &Molecule::dipole(p, q));
            dipole_distortion = dipole_distortion.max(image.l1_norm() / m.dist(p, q));
        }
    }
    let dipole_gap = (dipole_distortion - d_measured).abs();

    let mut violations = domination_violations + averaged_violations;
    if max_gap > DEFAULT_TOL {
        violations += 1;
        failures.push(format!("tree norm vs flow solver gap {max_gap} above tolerance"));
    }
    if dipole_gap > DEFAULT_TOL {
        violations += 1;
        failures.push(format!("dipole distortion differs from stochastic stretch by {dipole_gap}"));
    }
    if domination_violations > 0 {
        failures.push(format!("lifted-norm domination failed {domination_violations} times"));
    }
    if averaged_violations > 0 {
        failures.push(format!("averaged lifted norm exceeded bound {averaged_violations} times"));
    }

    FreespaceSummary {
        molecules,
        max_tree_vs_flow_gap: max_gap,
        domination_violations,
        averaged_violations,
        dipole_distortion,
        dipole_vs_stretch_gap: dipole_gap,
        violations,
    }
}

fn random_lattice_ts(
    window: &LatticeWindow,
    max_lamps: usize,
    rng: &mut impl Rng,
) -> LatticeTsPoint {
    let count = rng.gen_range(0..=max_lamps);
    let lamps: Vec<LatticePoint> = (0..count).map(|_| window.random_point(rng)).collect();
    LatticeTsPoint::new(lamps, window.random_point(rng))
}

fn jitter(base: &LatticePoint, rng: &mut impl Rng) -> LatticePoint {
    LatticePoint(base.0.iter().map(|c| c + rng.gen_range(-2i64..=2)).collect())
}

/// Configuration close to `base`, for hitting small-τ scale buckets.
fn jittered_ts(base: &LatticePoint, rng: &mut impl Rng) -> LatticeTsPoint {
    let count = rng.gen_range(0..=2);
    let lamps: Vec<LatticePoint> = (0..count).map(|_| jitter(base, rng)).collect();
    LatticeTsPoint::new(lamps, jitter(base, rng))
}

/// Enumerates subsets of `points` of size ≤ max_size.
fn subsets_up_to(points: &[LatticePoint], max_size: usize) -> Vec<Vec<LatticePoint>> {
    let mut out: Vec<Vec<LatticePoint>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_size {
        let mut next = Vec::new();
        for idx_set in &frontier {
            let start = idx_set.last().map_or(0, |&i| i + 1);
            for i in start..points.len() {
                let mut grown = idx_set.clone();
                grown.push(i);
                next.push(grown);
            }
        }
        out.extend(
            next.iter()
                .map(|set| set.iter().map(|&i| points[i].clone()).collect::<Vec<_>>()),
        );
        frontier = next;
    }
    out
}

/// Folding checks: cell isometry (exhaustive over a 3×3 cell block),
/// 1-Lipschitzness, the σΔ identity and containment, walk shortening, and
/// the truncated coarse-embedding bounds when levels are requested.
pub fn run_fold(cfg: &FoldConfig) -> Result<ReportRow, RunError> {
    if cfg.fold_n < 1 {
        return Err(usage("fold_n must be >= 1"));
    }
    if cfg.d < 1 {
        return Err(usage("d must be >= 1"));
    }
    let n = cfg.fold_n;
    let d = cfg.d;
    let pair_budget = cfg.pairs.unwrap_or(500);
    let window = LatticeWindow::new(d, cfg.window.unwrap_or(3 * n.max(4)));
    let mut rng = rng_from(derive_seed(cfg.seed, STREAM_PAIRS));

    let mut row = blank_row(cfg.display_name(), "fold", cfg.seed);
    row.n = Some(n as usize);
    row.d = Some(d);

    // exhaustive cell isometry over cells s in {-1,0,1}^d, v = 0.
    // τ depends only on (AΔB, x, y), so enumerating the symmetric
    // difference C with one side empty covers all cell-confined pairs.
    let mut cell_pairs = 0usize;
    let mut cell_violations = 0usize;
    let max_cell_symmdiff = if (n as usize).pow(d as u32) <= 16 { 4 } else { 2 };
    let origin = LatticePoint(vec![0; d]);
    let mut cells: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..d {
        cells = cells
            .iter()
            .flat_map(|c| {
                [-1i64, 0, 1].iter().map(move |&s| {
                    let mut grown = c.clone();
                    grown.push(s);
                    grown
                })
            })
            .collect();
    }
    for s in &cells {
        // points of the cell n·s + [0,n)^d
        let mut cell_points: Vec<LatticePoint> = vec![LatticePoint(Vec::new())];
        for axis in 0..d {
            cell_points = cell_points
                .iter()
                .flat_map(|p| {
                    (0..n).map(move |c| {
                        let mut grown = p.0.clone();
                        grown.push(n * s[axis] + c);
                        grown
                    })
                })
                .map(LatticePoint)
                .collect();
        }
        let lamp_sets = subsets_up_to(&cell_points, max_cell_symmdiff);
        for lamps in &lamp_sets {
            for x in &cell_points {
                for y in &cell_points {
                    let u = LatticeTsPoint::new(lamps.iter().cloned(), x.clone());
                    let v = LatticeTsPoint::new([], y.clone());
                    let direct = tau_lattice(&u, &v).map_err(internal)?;
                    let folded = tau_lattice(
                        &fold_ts(n, &origin, &u).map_err(internal)?,
                        &fold_ts(n, &origin, &v).map_err(internal)?,
                    )
                    .map_err(internal)?;
                    cell_pairs += 1;
                    if (direct - folded).abs() > DEFAULT_TOL {
                        cell_violations += 1;
                    }
                }
            }
        }
    }

    // sampled 1-Lipschitzness of the induced map
    let mut lipschitz_violations = 0usize;
    let translate = window.random_point(&mut rng);
    let v0 = LatticePoint(translate.0.iter().map(|c| c.rem_euclid(n)).collect());
    for _ in 0..pair_budget {
        let u = random_lattice_ts(&window, 3, &mut rng);
        let w = random_lattice_ts(&window, 3, &mut rng);
        let direct = tau_lattice(&u, &w).map_err(internal)?;
        let folded = tau_lattice(
            &fold_ts(n, &v0, &u).map_err(internal)?,
            &fold_ts(n, &v0, &w).map_err(internal)?,
        )
        .map_err(internal)?;
        if folded > direct + DEFAULT_TOL {
            lipschitz_violations += 1;
        }
    }

    // σΔ identity and containment on random set pairs
    let mut sigma_violations = 0usize;
    let mut containment_violations = 0usize;
    for _ in 0..pair_budget {
        let a: BTreeSet<LatticePoint> =
            (0..rng.gen_range(0..6)).map(|_| window.random_point(&mut rng)).collect();
        let b: BTreeSet<LatticePoint> =
            (0..rng.gen_range(0..6)).map(|_| window.random_point(&mut rng)).collect();
        let ab: BTreeSet<LatticePoint> = a.symmetric_difference(&b).cloned().collect();
        let sa = fold_set(n, &v0, &a).map_err(internal)?;
        let sb = fold_set(n, &v0, &b).map_err(internal)?;
        let lhs: BTreeSet<LatticePoint> = sa.symmetric_difference(&sb).cloned().collect();
        if lhs != fold_set(n, &v0, &ab).map_err(internal)? {
            sigma_violations += 1;
        }
        let image: BTreeSet<LatticePoint> = ab
            .iter()
            .map(|x| fold_lattice(n, &v0, x))
            .collect::<Result<_, _>>()
            .map_err(internal)?;
        if !lhs.is_subset(&image) {
            containment_violations += 1;
        }
    }

    // walk shortening through the plain image of an arbitrary target set
    let mut walk_violations = 0usize;
    for _ in 0..pair_budget {
        let x = window.random_point(&mut rng);
        let y = window.random_point(&mut rng);
        let targets: BTreeSet<LatticePoint> =
            (0..rng.gen_range(0..4)).map(|_| window.random_point(&mut rng)).collect();
        let direct = tsp_lattice(&x, &targets, &y).map_err(internal)?;
        let folded_targets: BTreeSet<LatticePoint> = targets
            .iter()
            .map(|t| fold_lattice(n, &v0, t))
            .collect::<Result<_, _>>()
            .map_err(internal)?;
        let folded = tsp_lattice(
            &fold_lattice(n, &v0, &x).map_err(internal)?,
            &folded_targets,
            &fold_lattice(n, &v0, &y).map_err(internal)?,
        )
        .map_err(internal)?;
        if folded > direct + DEFAULT_TOL {
            walk_violations += 1;
        }
    }

    let coarse = if cfg.coarse_levels > 0 {
        Some(coarse_suite(cfg, &mut rng)?)
    } else {
        None
    };

    let violations = cell_violations
        + lipschitz_violations
        + sigma_violations
        + containment_violations
        + walk_violations
        + coarse.as_ref().map_or(0, |c| c.upper_violations + c.lower_violations);
    if violations > 0 {
        row.failures.push(format!("folding checks recorded {violations} violations"));
    }
    row.fold = Some(FoldSummary {
        cell_pairs,
        cell_isometry_violations: cell_violations,
        lipschitz_pairs: pair_budget,
        lipschitz_violations,
        sigma_identity_violations: sigma_violations,
        containment_violations,
        walk_shortening_violations: walk_violations,
        coarse,
        violations,
    });
    row.passed = row.failures.is_empty();
    Ok(row)
}

/// Truncated coarse-embedding checks: the Lipschitz upper bound with
/// constant Σ 1/k² on arbitrary sampled pairs, and the per-scale lower
/// bound with the recorded distortion bound on bucketed pairs.
fn coarse_suite(cfg: &FoldConfig, rng: &mut impl Rng) -> Result<CoarseSummary, RunError> {
    let d = cfg.d;
    let mode = match cfg.coarse_translates {
        Some(count) => TranslateMode::Subsampled(count),
        None => TranslateMode::Exhaustive,
    };
    let embedder = CoarseEmbedder::build(
        d,
        cfg.coarse_levels,
        cfg.coarse_samples.unwrap_or(16),
        derive_seed(cfg.seed, STREAM_ENSEMBLE),
        mode,
    )
    .map_err(internal)?;
    let lipschitz = embedder.lipschitz_constant();
    let pair_budget = cfg.pairs.unwrap_or(500).min(200);
    let window = LatticeWindow::new(d, 2 * embedder.levels().last().expect("levels").side);

    let mut upper_pairs = 0usize;
    let mut upper_violations = 0usize;
    for _ in 0..pair_budget {
        let u = random_lattice_ts(&window, 2, rng);
        let v = random_lattice_ts(&window, 2, rng);
        if u == v {
            continue;
        }
        let t = tau_lattice(&u, &v).map_err(internal)?;
        let h = embedder.distance(&u, &v).map_err(internal)?;
        upper_pairs += 1;
        if h > lipschitz * t + DEFAULT_TOL * t.max(1.0) {
            upper_violations += 1;
        }
    }

    // scale buckets: k with k+1 <= K, τ ∈ (2^(2^(k-1)), 2^(2^k)]
    let mut lower_pairs = 0usize;
    let mut lower_violations = 0usize;
    for k in 1..cfg.coarse_levels {
        let lo = 2f64.powi(1 << (k - 1));
        let hi = 2f64.powi(1 << k);
        let next = embedder
            .levels()
            .iter()
            .find(|l| l.k == k + 1)
            .expect("next level exists by loop bound");
        let mut found = 0usize;
        let mut attempts = 0usize;
        while found < pair_budget && attempts < pair_budget * 200 {
            attempts += 1;
            let base = window.random_point(rng);
            let u = jittered_ts(&base, rng);
            let v = jittered_ts(&base, rng);
            let t = tau_lattice(&u, &v).map_err(internal)?;
            if !(t > lo && t <= hi) {
                continue;
            }
            found += 1;
            // the measured diameter step of the bound chain
            let mut support: Vec<LatticePoint> = u.symm_diff(&v).into_iter().collect();
            support.push(u.pos.clone());
            support.push(v.pos.clone());
            let m_diam = support
                .iter()
                .flat_map(|a| support.iter().map(move |b| a.l1(b)))
                .max()
                .unwrap_or(0) as f64;
            let coverage = (next.side as f64 - m_diam) / next.side as f64;
            lower_pairs += 1;
            if coverage < 0.75 - 1e-12 {
                lower_violations += 1;
                continue;
            }
            let h = embedder.distance(&u, &v).map_err(internal)?;
            let kf = k as f64;
            let bound = 0.75f64.powi(d as i32) * t
                / (next.distortion_bound * (kf + 1.0) * (kf + 1.0) * 2f64.powi(k as i32 + 1));
            if h + DEFAULT_TOL < bound {
                lower_violations += 1;
            }
        }
    }

    Ok(CoarseSummary {
        levels: embedder
            .levels()
            .iter()
            .map(|l| CoarseLevelSummary {
                k: l.k,
                side: l.side,
                translates: l.translate_count(),
                subsampled: l.subsampled,
                ensemble_stretch: l.ensemble_stretch,
                distortion_bound: l.distortion_bound,
            })
            .collect(),
        lipschitz_constant: lipschitz,
        upper_pairs,
        upper_violations,
        lower_pairs,
        lower_violations,
    })
}

/// Runs every entry, in order, into one report.
pub fn run_suite(entries: &[SuiteEntry]) -> Result<Report, RunError> {
    let mut rows = Vec::with_capacity(entries.len());
    for entry in entries {
        let started = std::time::Instant::now();
        let row = match entry {
            SuiteEntry::Experiment(cfg) => run_experiment(cfg)?,
            SuiteEntry::Fold(cfg) => run_fold(cfg)?,
        };
        eprintln!(
            "[lamp] {} finished in {:.3}s ({})",
            row.name,
            started.elapsed().as_secs_f64(),
            if row.passed { "pass" } else { "fail" }
        );
        rows.push(row);
    }
    Ok(Report::new(rows))
}

/// Built-in suites.
pub mod presets {
    use super::*;

    /// Quick cross-family smoke suite.
    pub fn small() -> Vec<SuiteEntry> {
        vec![
            SuiteEntry::Experiment(ExperimentConfig {
                name: Some("cycle8-karp".into()),
                family: Family::Cycle,
                n: Some(8),
                d: None,
                k: None,
                level: None,
                path: None,
                embedder: Embedder::Karp,
                samples: 1,
                seed: 42,
                pair_policy: PairPolicy::Exhaustive,
                lifting_checks: true,
                freespace: true,
                molecules: Some(100),
            }),
            SuiteEntry::Experiment(ExperimentConfig {
                name: Some("path6-identity".into()),
                family: Family::Path,
                n: Some(6),
                d: None,
                k: None,
                level: None,
                path: None,
                embedder: Embedder::IdentityTree,
                samples: 1,
                seed: 42,
                pair_policy: PairPolicy::Exhaustive,
                lifting_checks: true,
                freespace: false,
                molecules: None,
            }),
            SuiteEntry::Experiment(ExperimentConfig {
                name: Some("grid4x4-frt200".into()),
                family: Family::Grid,
                n: Some(4),
                d: Some(2),
                k: None,
                level: None,
                path: None,
                embedder: Embedder::Frt,
                samples: 200,
                seed: 42,
                pair_policy: PairPolicy::Sampled { count: 200, max_symmdiff: 8 },
                lifting_checks: true,
                freespace: false,
                molecules: None,
            }),
            SuiteEntry::Fold(FoldConfig {
                name: Some("fold4-d2".into()),
                fold_n: 4,
                d: 2,
                seed: 42,
                pairs: Some(200),
                window: None,
                coarse_levels: 0,
                coarse_samples: None,
                coarse_translates: None,
            }),
        ]
    }

    /// The general-bound regression campaign: 200-sample ensembles on
    /// cycles, grids, random trees, and random graphs with 8..64 points.
    pub fn cor7() -> Vec<SuiteEntry> {
        let mut entries = Vec::new();
        let sizes = [8usize, 16, 32, 64];
        for (fi, family) in
            [Family::Cycle, Family::Grid, Family::RandomTree, Family::RandomGraph]
                .into_iter()
                .enumerate()
        {
            for (si, &points) in sizes.iter().enumerate() {
                // grids are expressed as side^d with the matching point count
                let (n, d) = match (family, points) {
                    (Family::Grid, 8) => (2, Some(3)),
                    (Family::Grid, 16) => (4, Some(2)),
                    (Family::Grid, 32) => (2, Some(5)),
                    (Family::Grid, 64) => (8, Some(2)),
                    (_, p) => (p, None),
                };
                entries.push(SuiteEntry::Experiment(ExperimentConfig {
                    name: Some(format!("{family}-{points}")),
                    family,
                    n: Some(n),
                    d,
                    k: match family {
                        Family::RandomGraph => Some(points / 2),
                        _ => None,
                    },
                    level: None,
                    path: None,
                    embedder: Embedder::Frt,
                    samples: 200,
                    seed: 42 + (fi * sizes.len() + si) as u64,
                    pair_policy: PairPolicy::Sampled { count: 300, max_symmdiff: 8 },
                    lifting_checks: false,
                    freespace: false,
                    molecules: None,
                }));
            }
        }
        entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_cfg(n: usize, embedder: Embedder) -> ExperimentConfig {
        ExperimentConfig {
            name: None,
            family: Family::Cycle,
            n: Some(n),
            d: None,
            k: None,
            level: None,
            path: None,
            embedder,
            samples: 4,
            seed: 11,
            pair_policy: PairPolicy::Exhaustive,
            lifting_checks: true,
            freespace: false,
            molecules: None,
        }
    }

    #[test]
    fn karp_cycle8_matches_closed_form() {
        let row = run_experiment(&cycle_cfg(8, Embedder::Karp)).unwrap();
        assert!(row.passed, "failures: {:?}", row.failures);
        assert!((row.d_measured.unwrap() - 1.75).abs() < 1e-12);
        assert!(row.distortion.unwrap() <= 10.5 + 1e-9);
        assert_eq!(row.domination_violations, Some(0));
        assert_eq!(row.lifting_violations, Some(0));
    }

    #[test]
    fn identity_tree_on_path_is_within_six() {
        let cfg = ExperimentConfig {
            family: Family::Path,
            n: Some(6),
            embedder: Embedder::IdentityTree,
            ..cycle_cfg(6, Embedder::IdentityTree)
        };
        let row = run_experiment(&cfg).unwrap();
        assert!(row.passed, "failures: {:?}", row.failures);
        assert!((row.d_measured.unwrap() - 1.0).abs() < 1e-12);
        assert!(row.distortion.unwrap() <= 6.0 + 1e-9);
    }

    #[test]
    fn usage_errors_are_distinguished() {
        let mut cfg = cycle_cfg(8, Embedder::Karp);
        cfg.family = Family::Grid;
        match run_experiment(&cfg) {
            Err(RunError::Usage(_)) => {}
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn fold_smoke_run_passes() {
        let cfg = FoldConfig {
            name: None,
            fold_n: 3,
            d: 2,
            seed: 5,
            pairs: Some(60),
            window: Some(8),
            coarse_levels: 0,
            coarse_samples: None,
            coarse_translates: None,
        };
        let row = run_fold(&cfg).unwrap();
        assert!(row.passed, "failures: {:?}", row.failures);
        let fold = row.fold.unwrap();
        assert!(fold.cell_pairs > 0);
        assert_eq!(fold.violations, 0);
    }

    #[test]
    fn suite_rows_are_deterministic() {
        let entries = vec![SuiteEntry::Experiment(cycle_cfg(6, Embedder::Frt))];
        let a = run_suite(&entries).unwrap().to_json();
        let b = run_suite(&entries).unwrap().to_json();
        assert_eq!(a, b);
    }
}
