use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lamplighter_cli::config::{
    Embedder, ExperimentConfig, Family, FoldConfig, PairPolicy, SuiteEntry,
};
use lamplighter_cli::report::Report;
use lamplighter_cli::runner::{self, RunError};
use lamplighter_core::metric::shortest_path_metric;
use lamplighter_core::tsp::{
    lamplighter_bfs_oracle, lamplighter_distance, tau, LamplighterPoint, BFS_VERTEX_CAP,
};

/// Lamplighter metric toolkit: exact semi-metrics, stochastic tree
/// embeddings, and distortion measurement campaigns.
#[derive(Parser)]
#[command(name = "lamp", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact τ and lamplighter distance for one pair, cross-checked
    /// against the explicit lamplighter-graph BFS when feasible.
    Tsp(TspArgs),
    /// Build an embedder and report domination and expected stretch.
    Embed(ExperimentArgs),
    /// Full distortion run: domination, stretch, lifting checks, and the
    /// end-to-end pipeline against exact lamplighter distances.
    Distortion(ExperimentArgs),
    /// Distortion run plus the free-space (transport norm) suite.
    Freespace(FreespaceArgs),
    /// Folding checks over the lattice, optionally with the truncated
    /// coarse embedding.
    Fold(FoldArgs),
    /// Run a suite of experiments from a config file or preset.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct FamilyArgs {
    /// Graph family: path|cycle|grid|torus|diamond|random_tree|random_graph|complete|file
    #[arg(long)]
    family: Family,
    /// Point count (or grid/torus side).
    #[arg(long)]
    n: Option<usize>,
    /// Dimension for grid/torus.
    #[arg(long)]
    d: Option<usize>,
    /// Extra edges for random_graph.
    #[arg(long)]
    k: Option<usize>,
    /// Recursion level for diamond.
    #[arg(long)]
    level: Option<usize>,
    /// Graph file (family=file): first line `n m`, then `u v w` lines.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct TspArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Start position.
    #[arg(long)]
    x: usize,
    /// End position.
    #[arg(long)]
    y: usize,
    /// Comma-separated lamp set of the first configuration.
    #[arg(long, default_value = "")]
    lamps_a: String,
    /// Comma-separated lamp set of the second configuration.
    #[arg(long, default_value = "")]
    lamps_b: String,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value = "frt")]
    embedder: Embedder,
    /// Ensemble size for frt.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Pair policy: exhaustive | sampled:<count>:<max_symmdiff>
    #[arg(long, default_value = "exhaustive")]
    pairs: PairPolicy,
    /// Base output path; writes <out>.json and <out>.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stdout format when --out is absent: json | csv
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct FreespaceArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Random molecules to test.
    #[arg(long, default_value_t = 200)]
    molecules: usize,
}

#[derive(Args)]
struct FoldArgs {
    /// Box side of the fold.
    #[arg(long, default_value_t = 4)]
    fold_n: i64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Sampled pairs per randomized check.
    #[arg(long, default_value_t = 500)]
    pairs: usize,
    /// Window radius for sampled lattice points.
    #[arg(long)]
    window: Option<i64>,
    /// Levels of the truncated coarse embedding (0 = skip).
    #[arg(long, default_value_t = 0)]
    coarse_levels: u32,
    #[arg(long)]
    coarse_samples: Option<usize>,
    /// Translate subsample size (exhaustive when absent).
    #[arg(long)]
    coarse_translates: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct SuiteArgs {
    /// JSON config: an array of suite entries.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in suite: small | cor7
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
}

fn parse_lamps(s: &str) -> Result<BTreeSet<usize>, String> {
    let mut out = BTreeSet::new();
    for token in s.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        out.insert(token.parse::<usize>().map_err(|e| format!("bad lamp {token:?}: {e}"))?);
    }
    Ok(out)
}

fn experiment_config(args: &ExperimentArgs) -> ExperimentConfig {
    ExperimentConfig {
        name: None,
        family: args.family.family,
        n: args.family.n,
        d: args.family.d,
        k: args.family.k,
        level: args.family.level,
        path: args.family.file.clone(),
        embedder: args.embedder,
        samples: args.samples,
        seed: args.family.seed,
        pair_policy: args.pairs,
        lifting_checks: true,
        freespace: false,
        molecules: None,
    }
}

#[derive(Serialize)]
struct TspOutput {
    tau: f64,
    symm_diff: usize,
    lamplighter_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bfs_oracle: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_agrees: Option<bool>,
}

fn run_tsp(args: &TspArgs) -> Result<bool, RunError> {
    let cfg = ExperimentConfig {
        name: None,
        family: args.family.family,
        n: args.family.n,
        d: args.family.d,
        k: args.family.k,
        level: args.family.level,
        path: args.family.file.clone(),
        embedder: Embedder::Frt,
        samples: 1,
        seed: args.family.seed,
        pair_policy: PairPolicy::Exhaustive,
        lifting_checks: false,
        freespace: false,
        molecules: None,
    };
    let g = runner::generate(&cfg)?;
    let m = shortest_path_metric(&g);
    let u = LamplighterPoint::new(
        parse_lamps(&args.lamps_a).map_err(RunError::Usage)?,
        args.x,
    );
    let v = LamplighterPoint::new(
        parse_lamps(&args.lamps_b).map_err(RunError::Usage)?,
        args.y,
    );
    let t = tau(&m, &u, &v).map_err(|e| RunError::Failed(e.to_string()))?;
    let dist = lamplighter_distance(&m, &u, &v).map_err(|e| RunError::Failed(e.to_string()))?;
    let bfs = if g.is_unit_weight() && g.n() <= BFS_VERTEX_CAP {
        Some(lamplighter_bfs_oracle(&g, &u, &v).map_err(|e| RunError::Failed(e.to_string()))?)
    } else {
        None
    };
    let agrees = bfs.map(|b| b as f64 == dist);
    let out = TspOutput {
        tau: t,
        symm_diff: u.symm_diff(&v).len(),
        lamplighter_distance: dist,
        bfs_oracle: bfs,
        oracle_agrees: agrees,
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
    Ok(agrees.unwrap_or(true))
}

fn emit(report: &Report, out: &Option<PathBuf>, format: &str) -> Result<(), RunError> {
    if let Some(base) = out {
        let json_path = base.with_extension("json");
        let csv_path = base.with_extension("csv");
        std::fs::write(&json_path, report.to_json())
            .map_err(|e| RunError::Failed(format!("writing {}: {e}", json_path.display())))?;
        std::fs::write(&csv_path, report.to_csv())
            .map_err(|e| RunError::Failed(format!("writing {}: {e}", csv_path.display())))?;
        eprintln!("[lamp] wrote {} and {}", json_path.display(), csv_path.display());
    } else {
        match format {
            "json" => print!("{}", report.to_json()),
            "csv" => print!("{}", report.to_csv()),
            other => return Err(RunError::Usage(format!("unknown format {other:?}"))),
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool, RunError> {
    match cli.cmd {
        Cmd::Tsp(args) => run_tsp(&args),
        Cmd::Embed(args) => {
            let cfg = experiment_config(&args);
            let row = runner::run_embed(&cfg)?;
            let passed = row.passed;
            emit(&Report::new(vec![row]), &args.out, &args.format)?;
            Ok(passed)
        }
        Cmd::Distortion(args) => {
            let cfg = experiment_config(&args);
            let row = runner::run_experiment(&cfg)?;
            let passed = row.passed;
            emit(&Report::new(vec![row]), &args.out, &args.format)?;
            Ok(passed)
        }
        Cmd::Freespace(args) => {
            let mut cfg = experiment_config(&args.experiment);
            cfg.freespace = true;
            cfg.molecules = Some(args.molecules);
            let row = runner::run_experiment(&cfg)?;
            let passed = row.passed;
            emit(&Report::new(vec![row]), &args.experiment.out, &args.experiment.format)?;
            Ok(passed)
        }
        Cmd::Fold(args) => {
            let cfg = FoldConfig {
                name: None,
                fold_n: args.fold_n,
                d: args.d,
                seed: args.seed,
                pairs: Some(args.pairs),
                window: args.window,
                coarse_levels: args.coarse_levels,
                coarse_samples: args.coarse_samples,
                coarse_translates: args.coarse_translates,
            };
            let row = runner::run_fold(&cfg)?;
            let passed = row.passed;
            emit(&Report::new(vec![row]), &args.out, &args.format)?;
            Ok(passed)
        }
        Cmd::Suite(args) => {
            let entries: Vec<SuiteEntry> = if let Some(path) = &args.config {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    RunError::Usage(format!("cannot read {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| RunError::Usage(format!("bad suite config: {e}")))?
            } else {
                match args.preset.as_deref() {
                    Some("small") => runner::presets::small(),
                    Some("cor7") => runner::presets::cor7(),
                    Some(other) => {
                        return Err(RunError::Usage(format!("unknown preset {other:?}")))
                    }
                    None => {
                        return Err(RunError::Usage("suite needs --config or --preset".into()))
                    }
                }
            };
            let report = runner::run_suite(&entries)?;
            let passed = report.all_passed;
            emit(&report, &args.out, &args.format)?;
            Ok(passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("[lamp] one or more checks failed");
            ExitCode::from(1)
        }
        Err(RunError::Usage(msg)) => {
            eprintln!("[lamp] usage error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Failed(msg)) => {
            eprintln!("[lamp] error: {msg}");
            ExitCode::from(1)
        }
    }
}
