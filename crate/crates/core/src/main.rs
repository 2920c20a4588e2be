//! Command line front end: schedule generation, reference tables, single
//! runs, full experiment matrices, and report regeneration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dlcbench::constraints::{
    build_schedule, ChangeClock, ChangeMode, ConstraintSchedule, ScheduleConfig, SeverityProfile,
};
use dlcbench::engine::{self, DeConfig, Instance};
use dlcbench::handlers::{EpsilonParams, HandlerKind};
use dlcbench::harness::{execute, expand_matrix, write_reports, ExperimentConfig};
use dlcbench::metrics::{best_known, modified_offline_error, BestKnownTable};
use dlcbench::objectives::{BoxBounds, ObjectiveKind};

#[derive(Parser)]
#[command(
    name = "dlcbench",
    version,
    about = "Benchmark toolkit for optimization under dynamic linear constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a constraint schedule and write it as JSON
    GenSchedule(GenScheduleArgs),
    /// Compute per-frame reference objectives for a schedule
    BestKnown(BestKnownArgs),
    /// Optimize one schedule and write per-generation traces
    Run(RunArgs),
    /// Execute an experiment matrix described by a JSON config
    Matrix(MatrixArgs),
    /// Rebuild aggregate reports from an existing results directory
    Report(ReportArgs),
}

#[derive(Args)]
struct GenScheduleArgs {
    /// Output path for the schedule JSON
    #[arg(long)]
    out: PathBuf,
    /// Trial evaluations between consecutive changes
    #[arg(long, default_value_t = 1000)]
    tau: u64,
    /// Trial evaluations before the first change
    #[arg(long, default_value_t = 1000)]
    buffer: u64,
    /// Number of changes after the initial frame
    #[arg(long, default_value_t = 100)]
    changes: u32,
    /// translate | translate+rotate | multi-translate
    #[arg(long, default_value = "translate")]
    mode: ChangeMode,
    /// small | medium | large
    #[arg(long, default_value = "medium")]
    severity: SeverityProfile,
    #[arg(long, default_value_t = 30)]
    dimension: usize,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    lower: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    upper: f64,
    /// Constraints per frame (multi-translate only)
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Rotation probability per change (translate+rotate only)
    #[arg(long, default_value_t = 0.5)]
    p_rot: f64,
    /// Coefficient pair swaps per rotation
    #[arg(long, default_value_t = 1)]
    swaps: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct BestKnownArgs {
    /// Schedule JSON produced by gen-schedule
    #[arg(long)]
    schedule: PathBuf,
    /// sphere | rastrigin | ackley | rosenbrock
    #[arg(long, default_value = "sphere")]
    function: ObjectiveKind,
    /// Static search budget per frame
    #[arg(long, default_value_t = 200_000, conflicts_with = "analytic")]
    evals: u64,
    /// Closed-form sphere optima instead of a search
    #[arg(long)]
    analytic: bool,
    /// Seed for the per-frame searches
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path for the table JSON
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Schedule JSON produced by gen-schedule
    #[arg(long)]
    schedule: PathBuf,
    /// sphere | rastrigin | ackley | rosenbrock
    #[arg(long, default_value = "sphere")]
    function: ObjectiveKind,
    /// feasibility | penalty | epsilon
    #[arg(long)]
    handler: HandlerKind,
    /// Engine seed of the first run; run r uses seed + r
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Independent runs
    #[arg(long, default_value_t = 1)]
    runs: u32,
    /// Directory for trace CSVs
    #[arg(long)]
    out: PathBuf,
    /// Reference table JSON; enables the offline error column
    #[arg(long)]
    best_known: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
    /// Results directory; defaults to the config's outputDir, then ./results
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to one per core
    #[arg(long)]
    workers: Option<usize>,
    /// Recompute artifacts that already exist
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Results directory holding run records
    #[arg(long = "in")]
    input: PathBuf,
    /// Significance level for the statistical tests
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenSchedule(args) => gen_schedule(args),
        Command::BestKnown(args) => best_known_cmd(args),
        Command::Run(args) => run_cmd(args),
        Command::Matrix(args) => matrix_cmd(args),
        Command::Report(args) => report_cmd(args),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating directory {}", dir.display()))?;
    }
    Ok(())
}

fn gen_schedule(args: GenScheduleArgs) -> Result<()> {
    let config = ScheduleConfig {
        dimension: args.dimension,
        bounds: BoxBounds::new(args.lower, args.upper)?,
        clock: ChangeClock::new(args.tau, args.buffer, args.changes)?,
        mode: args.mode,
        severity: args.severity,
        m: if args.mode == ChangeMode::MultiTranslate {
            args.m
        } else {
            1
        },
        p_rot: args.p_rot,
        swaps: args.swaps,
        seed: args.seed,
    };
    let schedule = build_schedule(&config)?;
    ensure_parent(&args.out)?;
    schedule.save(&args.out)?;
    println!(
        "schedule: {} frames, {} evals budget -> {}",
        schedule.frames.len(),
        schedule.clock.total_budget(),
        args.out.display()
    );
    Ok(())
}

fn best_known_cmd(args: BestKnownArgs) -> Result<()> {
    let schedule = ConstraintSchedule::load(&args.schedule)?;
    let table = if args.analytic {
        if args.function != ObjectiveKind::Sphere {
            bail!("--analytic only covers the sphere objective");
        }
        BestKnownTable::analytic_sphere(&schedule)?
    } else {
        best_known(&schedule, args.function, args.evals, args.seed)?
    };
    let infeasible = table.entries.iter().filter(|e| !e.feasible).count();
    ensure_parent(&args.out)?;
    table.save(&args.out)?;
    println!(
        "best known: {} frames ({} infeasible) -> {}",
        table.entries.len(),
        infeasible,
        args.out.display()
    );
    Ok(())
}

fn run_cmd(args: RunArgs) -> Result<()> {
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let schedule = ConstraintSchedule::load(&args.schedule)?;
    let instance = Instance::new(args.function, schedule)?;
    let table = args
        .best_known
        .as_ref()
        .map(BestKnownTable::load)
        .transpose()?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating directory {}", args.out.display()))?;

    let de = DeConfig::default();
    let params = EpsilonParams::default();
    let mut errors = Vec::new();
    for r in 0..args.runs {
        let seed = args.seed + u64::from(r);
        let trace = engine::run(&instance, args.handler, &params, &de, seed)?;
        let name = format!("trace_{}_run_{r:02}.csv", args.handler.name());
        trace.write_csv(args.out.join(&name))?;
        match &table {
            Some(table) => {
                let moffe = modified_offline_error(&trace, table)?;
                errors.push(moffe);
                println!("run {r:02} seed {seed} offline error {moffe} -> {name}");
            }
            None => println!("run {r:02} seed {seed} -> {name}"),
        }
    }
    if errors.len() > 1 {
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        println!("mean offline error over {} runs: {mean}", errors.len());
    }
    Ok(())
}

fn matrix_cmd(args: MatrixArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let out = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let jobs = expand_matrix(&cfg)?.len() * cfg.handlers.len();
    println!("matrix: {jobs} jobs -> {}", out.display());
    let report = execute(&cfg, &out, args.workers, args.force)?;
    println!(
        "completed {} skipped {} failed {}",
        report.completed,
        report.skipped,
        report.failed.len()
    );
    if !report.failed.is_empty() {
        for (label, reason) in &report.failed {
            eprintln!("failed {label}: {reason}");
        }
        bail!("{} of {jobs} jobs failed", report.failed.len());
    }
    Ok(())
}

fn report_cmd(args: ReportArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.alpha) {
        bail!("--alpha must lie in [0, 1], got {}", args.alpha);
    }
    write_reports(&args.input, args.alpha)?;
    println!(
        "reports: summary.csv, ranking.csv, stats.csv -> {}",
        args.input.display()
    );
    Ok(())
}
