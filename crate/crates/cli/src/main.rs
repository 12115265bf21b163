use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use batchbo_core::harness::output::{rank_results, write_rank_table};
use batchbo_core::harness::{self, emit_outputs, load_result, ExperimentConfig, ExperimentResult, StrategyKind};
use batchbo_core::objective::{brute_force_oracle, objective_by_name, PoolParams};

#[derive(Parser)]
#[command(name = "batchbo", version, about = "Batch Bayesian optimisation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated optimisation experiments and write CSV/JSON artifacts.
    Run(RunArgs),
    /// Rank strategies across tasks by normalised Z score.
    Rank(RankArgs),
    /// Brute-force check of an objective's recorded optimum.
    Oracle(OracleArgs),
}

#[derive(Args, Default)]
struct PoolArgs {
    /// Candidate count of the sparse pool.
    #[arg(long)]
    pool_size: Option<usize>,
    /// Feature dimension of the sparse pool.
    #[arg(long)]
    pool_dim: Option<usize>,
    /// Non-zero weights of the sparse pool's score.
    #[arg(long)]
    pool_sparsity: Option<usize>,
    /// Seed of the sparse pool; defaults to --seed.
    #[arg(long)]
    pool_seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with any of the run options; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// branin | camel6 | hartmann6 | sparse-pool | xsinx
    #[arg(long)]
    objective: Option<String>,
    /// kmbbo | cs-kmbbo | thompson | cl | qei | lp
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Size of the uniform initial design.
    #[arg(long)]
    init: Option<usize>,
    #[arg(long)]
    slice_samples: Option<usize>,
    /// Candidate grid size for the grid-based baselines.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Base seed; repeat r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    pool: PoolArgs,
    #[arg(long)]
    gp_restarts: Option<usize>,
    #[arg(long)]
    gp_max_iters: Option<usize>,
    #[arg(long)]
    cs_epsilon: Option<f64>,
    #[arg(long)]
    cs_calibration_samples: Option<usize>,
    /// Regret tolerance for first-encounter times.
    #[arg(long)]
    encounter_tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct RankArgs {
    /// Output directories (or result.json files) of `run`.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    objective: String,
    #[command(flatten)]
    pool: PoolArgs,
    /// Uniform draws before local refinement (continuous domains).
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// Layout of the `--config` file: every experiment field plus `out` and `jobs`.
#[derive(Deserialize, Default)]
#[serde(default)]
struct RunFile {
    #[serde(flatten)]
    experiment: ExperimentConfig,
    out: Option<PathBuf>,
    jobs: Option<usize>,
}

fn pool_params(base: PoolParams, args: &PoolArgs, seed: Option<u64>) -> PoolParams {
    PoolParams {
        size: args.pool_size.unwrap_or(base.size),
        dim: args.pool_dim.unwrap_or(base.dim),
        sparsity: args.pool_sparsity.unwrap_or(base.sparsity),
        seed: args.pool_seed.or(seed).unwrap_or(base.seed),
    }
}

fn resolve_run(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf, usize)> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<RunFile>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunFile::default(),
    };
    let mut cfg = file.experiment;
    macro_rules! set {
        ($field:expr, $flag:expr) => {
            if let Some(v) = $flag.clone() {
                $field = v;
            }
        };
    }
    set!(cfg.objective, args.objective);
    if let Some(s) = &args.strategy {
        cfg.strategy = StrategyKind::parse(s)?;
    }
    set!(cfg.batch_size, args.batch_size);
    set!(cfg.n_epochs, args.epochs);
    set!(cfg.n_init, args.init);
    set!(cfg.n_slice, args.slice_samples);
    set!(cfg.n_grid, args.grid);
    set!(cfg.n_repeats, args.repeats);
    set!(cfg.base_seed, args.seed);
    set!(cfg.gp.restarts, args.gp_restarts);
    set!(cfg.gp.max_iters, args.gp_max_iters);
    set!(cfg.cs_epsilon, args.cs_epsilon);
    set!(cfg.cs_calibration_samples, args.cs_calibration_samples);
    if args.encounter_tol.is_some() {
        cfg.encounter_tol = args.encounter_tol;
    }
    cfg.pool = pool_params(cfg.pool, &args.pool, args.seed);
    cfg.validate()?;

    let Some(out) = args.out.clone().or(file.out) else {
        bail!("an output directory is required (--out or `out` in the config file)");
    };
    let jobs = args.jobs.or(file.jobs).unwrap_or(1);
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    Ok((cfg, out, jobs))
}

fn print_run_summary(result: &ExperimentResult, out: &Path) {
    let s = &result.summary;
    println!(
        "{} on {}: {} of {} repeats completed",
        result.strategy,
        result.objective.name,
        result.repeats.len(),
        result.n_repeats()
    );
    match &s.final_stats {
        Some(f) => println!(
            "final {}: mean {:.6} std {:.6} (bootstrap std of mean {:.6})",
            s.metric, f.mean, f.std, f.bootstrap_std
        ),
        None => println!("final {}: unavailable (no completed repeats)", s.metric),
    }
    if let Some(w) = s.mean_epoch_wall_seconds {
        println!("mean wall seconds per epoch: {w:.3}");
    }
    if let (Some(times), Some(tol)) = (&s.first_encounter, result.encounter_tol) {
        println!("first-encounter histogram (tolerance {tol}):");
        for t in 0..=result.config.n_epochs {
            println!("  epoch {t:>3}: {}", times.iter().filter(|x| **x == Some(t)).count());
        }
        println!("  never    : {}", times.iter().filter(|x| x.is_none()).count());
    }
    println!("artifacts written to {}", out.display());
}

fn run(args: RunArgs) -> Result<()> {
    let (cfg, out, jobs) = resolve_run(&args)?;
    log::info!("running {} on {} ({} repeats, {jobs} jobs)", cfg.strategy.name(), cfg.objective, cfg.n_repeats);
    let result = harness::run_experiment(&cfg, jobs)?;
    emit_outputs(&result, &out).with_context(|| format!("writing artifacts to {}", out.display()))?;
    if !result.failures.is_empty() {
        eprintln!(
            "warning: {} of {} repeats failed; see `failures` in {}",
            result.failures.len(),
            result.n_repeats(),
            out.join(harness::output::RESULT_FILE).display()
        );
    }
    print_run_summary(&result, &out);
    Ok(())
}

fn rank(args: RankArgs) -> Result<()> {
    let results = args
        .inputs
        .iter()
        .map(|p| load_result(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let (tasks, agg) = rank_results(&results)?;
    println!("tasks: {}", tasks.iter().map(|t| t.task.as_str()).collect::<Vec<_>>().join(", "));
    println!("{:<12} {:>14} {:>14}", "strategy", "performance_z", "variance_z");
    for row in &agg.rows {
        println!("{:<12} {:>14.4} {:>14.4}", row.strategy, row.performance, row.variance);
    }
    if !agg.excluded.is_empty() {
        eprintln!("warning: excluded (not run on every task): {}", agg.excluded.join(", "));
    }
    if !agg.degenerate_tasks.is_empty() {
        eprintln!("warning: tied scores on: {}", agg.degenerate_tasks.join(", "));
    }
    if let Some(path) = args.out {
        write_rank_table(&agg, &path)?;
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let pool = pool_params(PoolParams::default(), &args.pool, None);
    let objective = objective_by_name(&args.objective, pool)?;
    let report = brute_force_oracle(&objective, args.samples, args.seed)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(excess) = report.excess {
        if excess > 1e-6 * (1.0 + report.best_value.abs()) {
            eprintln!("warning: the search beat the recorded optimum by {excess}");
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Rank(a) => rank(a),
        Command::Oracle(a) => oracle(a),
    }
}
