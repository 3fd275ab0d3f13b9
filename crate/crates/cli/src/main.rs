//! Command-line front end: approximate solves, bare projections, polytope
//! rounding, the exact LP oracle, and the image benchmark harness.
//!
//! Exit codes: 0 success, 2 input/format errors, 3 numeric failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use otkit::bench::{
    l1_cost_matrix, load_idx_images_path, records_to_csv, run_head_to_head, summarize,
    synth_image, HeadToHeadConfig, IdxSelection,
};
use otkit::greenkhorn::{greenkhorn_project_with, GreenkhornOptions};
use otkit::sinkhorn::{sinkhorn_project_with, ProjectOptions, ProjectionTrace};
use otkit::{
    approx_ot_with, exact_ot, marginal_violation, round_randomized, round_to_polytope,
    CostMatrix, Marginal, ProjectorKind, SolveOptions,
};

#[derive(Parser)]
#[command(name = "otkit", version, about = "Entropic optimal transport toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate the optimal transport distance to additive accuracy eps
    Solve(SolveArgs),
    /// Run only the approximate projection and report its convergence
    Project(ProjectArgs),
    /// Round a nonnegative matrix to exact feasibility for (r, c)
    Round(RoundArgs),
    /// Solve the transportation LP exactly (desk scale, n <= 256)
    Oracle(OracleArgs),
    /// Image-transport benchmark: head-to-head projector comparison
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProjectorArg {
    Sinkhorn,
    Greenkhorn,
}

impl From<ProjectorArg> for ProjectorKind {
    fn from(arg: ProjectorArg) -> Self {
        match arg {
            ProjectorArg::Sinkhorn => ProjectorKind::Sinkhorn,
            ProjectorArg::Greenkhorn => ProjectorKind::Greenkhorn,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Cost matrix file (text: one row per line, space-separated)
    cost: PathBuf,
    /// Row marginal file (text vector)
    r: PathBuf,
    /// Column marginal file (text vector)
    c: PathBuf,
    /// Additive accuracy target, in the cost's units
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Projection algorithm
    #[arg(long, value_enum, default_value_t = ProjectorArg::Sinkhorn)]
    projector: ProjectorArg,
    /// Override the schedule's regularization strength (small-eta regime;
    /// the additive guarantee no longer applies)
    #[arg(long)]
    eta_override: Option<f64>,
    /// Write the per-iteration trace (iter,dist,potential,target) as CSV
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Emit machine-readable JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ProjectArgs {
    /// Strictly positive matrix file to project
    matrix: PathBuf,
    /// Row marginal file
    r: PathBuf,
    /// Column marginal file
    c: PathBuf,
    /// Target l1 marginal violation
    #[arg(long, default_value_t = 1e-4)]
    eps_prime: f64,
    /// Projection algorithm
    #[arg(long, value_enum, default_value_t = ProjectorArg::Sinkhorn)]
    projector: ProjectorArg,
    /// Greedy solver only: start from the column-then-row warm start
    #[arg(long)]
    warm_start: bool,
    /// Write the per-iteration trace as CSV
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RoundArgs {
    /// Nonnegative matrix file to round
    matrix: PathBuf,
    /// Row marginal file
    r: PathBuf,
    /// Column marginal file
    c: PathBuf,
    /// Rounding order: 0 rows-then-columns, 1 columns-then-rows
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1), default_value_t = 0)]
    coin: u8,
    /// Write the rounded plan here (default: stdout)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Cost matrix file
    cost: PathBuf,
    /// Row marginal file
    r: PathBuf,
    /// Column marginal file
    c: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BenchMode {
    Synthetic,
    Mnist,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance source
    #[arg(long, value_enum, default_value_t = BenchMode::Synthetic)]
    mode: BenchMode,
    /// Image side length (synthetic mode; mnist takes it from the file)
    #[arg(long, default_value_t = 20)]
    m: usize,
    /// Foreground area fraction for synthetic images
    #[arg(long, default_value_t = 0.2)]
    fg: f64,
    /// Accuracy target used to derive eta when --eta is absent
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Regularization strength (default: 4 ln(n) / eps)
    #[arg(long)]
    eta: Option<f64>,
    /// Number of image pairs
    #[arg(long, default_value_t = 10)]
    pairs: usize,
    /// Base seed (default: OTKIT_SEED env var, else 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Update budget in row/column updates (default: n^2)
    #[arg(long)]
    budget: Option<u64>,
    /// Number of evenly spaced checkpoints up to the budget
    #[arg(long, default_value_t = 10)]
    checkpoints: usize,
    /// Worker threads (default: number of cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Round the iterate at each checkpoint and record its objective
    #[arg(long)]
    round_objective: bool,
    /// IDX image file (mnist mode)
    #[arg(long, value_name = "PATH")]
    mnist_images: Option<PathBuf>,
    /// Comma-separated image indices, paired consecutively (mnist mode;
    /// default: the first 2*pairs images)
    #[arg(long, value_name = "I,J,...")]
    indices: Option<String>,
    /// Background noise added to zero pixels before normalization
    /// (mnist mode; 0 disables)
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    /// Output directory for records.csv and summary.json
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Project(args) => cmd_project(args),
        Command::Round(args) => cmd_round(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("otkit: {err}");
            if err.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn load_marginal(path: &PathBuf) -> otkit::Result<Marginal> {
    Marginal::new(otkit::io::read_vector(path)?)
}

fn load_cost(path: &PathBuf) -> otkit::Result<CostMatrix> {
    CostMatrix::new(otkit::io::read_matrix(path)?)
}

fn write_trace(path: &PathBuf, trace: &ProjectionTrace) -> otkit::Result<()> {
    use std::fmt::Write as _;
    let mut out = String::from("iter,dist,potential,target\n");
    for rec in &trace.records {
        let _ = writeln!(out, "{},{},{},{}", rec.iter, rec.dist, rec.potential, rec.target);
    }
    Ok(std::fs::write(path, out)?)
}

fn max_residual(values: &[f64], target: &Marginal) -> f64 {
    values
        .iter()
        .zip(target.values())
        .fold(0.0_f64, |acc, (got, want)| acc.max((got - want).abs()))
}

fn cmd_solve(args: SolveArgs) -> otkit::Result<()> {
    let cost = load_cost(&args.cost)?;
    let r = load_marginal(&args.r)?;
    let c = load_marginal(&args.c)?;
    let options = SolveOptions {
        projector: args.projector.into(),
        eta_override: args.eta_override,
        record_trace: args.trace.is_some(),
    };
    let report = approx_ot_with(&cost, &r, &c, args.eps, &options)?;
    if let (Some(path), Some(trace)) = (&args.trace, &report.trace) {
        write_trace(path, trace)?;
    }
    let row_residual = max_residual(&report.plan.entries().row_sums(), &r);
    let col_residual = max_residual(&report.plan.entries().col_sums(), &c);
    let wall_ms = report.wall_time.as_secs_f64() * 1e3;
    if args.json {
        let payload = json!({
            "schema": 1,
            "objective": report.objective,
            "iterations": report.iterations,
            "eta": report.eta,
            "eps_prime": report.eps_prime,
            "projector": report.projector.to_string(),
            "max_row_residual": row_residual,
            "max_col_residual": col_residual,
            "wall_ms": wall_ms,
        });
        println!("{payload}");
    } else {
        println!("objective        {}", report.objective);
        println!("iterations       {}", report.iterations);
        println!("eta              {}", report.eta);
        println!("eps_prime        {}", report.eps_prime);
        println!("projector        {}", report.projector);
        println!("max row residual {row_residual:e}");
        println!("max col residual {col_residual:e}");
        println!("wall_ms          {wall_ms:.3}");
    }
    Ok(())
}

fn cmd_project(args: ProjectArgs) -> otkit::Result<()> {
    let matrix = otkit::io::read_matrix(&args.matrix)?;
    let r = load_marginal(&args.r)?;
    let c = load_marginal(&args.c)?;
    let record_trace = args.trace.is_some();
    let (kernel, trace) = match ProjectorKind::from(args.projector) {
        ProjectorKind::Sinkhorn => {
            let opts = ProjectOptions { record_trace };
            sinkhorn_project_with(&matrix, &r, &c, args.eps_prime, &opts)?
        }
        ProjectorKind::Greenkhorn => {
            let opts = GreenkhornOptions {
                record_trace,
                warm_start: args.warm_start,
                ..Default::default()
            };
            greenkhorn_project_with(&matrix, &r, &c, args.eps_prime, &opts)?
        }
    };
    if let Some(path) = &args.trace {
        write_trace(path, &trace)?;
    }
    let dist = kernel.cached_violation(&r, &c);
    if args.json {
        let payload = json!({
            "schema": 1,
            "dist": dist,
            "iterations": trace.iterations,
            "eps_prime": args.eps_prime,
            "projector": ProjectorKind::from(args.projector).to_string(),
        });
        println!("{payload}");
    } else {
        println!("dist       {dist:e}");
        println!("iterations {}", trace.iterations);
        println!("projector  {}", ProjectorKind::from(args.projector));
    }
    Ok(())
}

fn cmd_round(args: RoundArgs) -> otkit::Result<()> {
    let matrix = otkit::io::read_matrix(&args.matrix)?;
    let r = load_marginal(&args.r)?;
    let c = load_marginal(&args.c)?;
    let violation = marginal_violation(&matrix, &r, &c)?;
    let plan = if args.coin == 0 {
        round_to_polytope(&matrix, &r, &c)?
    } else {
        round_randomized(&matrix, &r, &c, true)?
    };
    let moved = plan.entries().l1_distance(&matrix)?;
    let rendered = otkit::io::format_matrix(plan.entries());
    match &args.out {
        Some(path) => std::fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    if args.json {
        let payload = json!({
            "schema": 1,
            "input_violation": violation,
            "l1_moved": moved,
            "bound": 2.0 * violation,
            "coin": args.coin,
        });
        println!("{payload}");
    } else {
        eprintln!("input violation {violation:e}; moved {moved:e} (bound {:e})", 2.0 * violation);
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> otkit::Result<()> {
    let cost = load_cost(&args.cost)?;
    let r = load_marginal(&args.r)?;
    let c = load_marginal(&args.c)?;
    let solution = exact_ot(&cost, &r, &c)?;
    if args.json {
        let payload = json!({
            "schema": 1,
            "value": solution.value,
            "dual_row": solution.dual_row,
            "dual_col": solution.dual_col,
        });
        println!("{payload}");
    } else {
        println!("value {}", solution.value);
    }
    Ok(())
}

fn parse_indices(text: &str) -> otkit::Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| otkit::Error::Format(format!("bad image index `{t}`")))
        })
        .collect()
}

fn cmd_bench(args: BenchArgs) -> otkit::Result<()> {
    let seed = args.seed.unwrap_or_else(|| {
        std::env::var("OTKIT_SEED")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    });

    // Pair k consumes seeds (seed + 2k, seed + 2k + 1) for its two images.
    let (pairs, m): (Vec<(Marginal, Marginal)>, usize) = match args.mode {
        BenchMode::Synthetic => {
            let mut pairs = Vec::with_capacity(args.pairs);
            for k in 0..args.pairs {
                let a = synth_image(args.m, args.fg, seed + 2 * k as u64)?;
                let b = synth_image(args.m, args.fg, seed + 2 * k as u64 + 1)?;
                pairs.push((a.to_marginal()?, b.to_marginal()?));
            }
            (pairs, args.m)
        }
        BenchMode::Mnist => {
            let path = args.mnist_images.as_ref().ok_or_else(|| {
                otkit::Error::Format("--mnist-images is required in mnist mode".into())
            })?;
            let noise = (args.noise > 0.0).then_some(args.noise);
            let indices = match &args.indices {
                Some(text) => parse_indices(text)?,
                None => (0..2 * args.pairs).collect(),
            };
            if indices.len() < 2 * args.pairs {
                return Err(otkit::Error::Format(format!(
                    "{} indices cannot form {} pairs",
                    indices.len(),
                    args.pairs
                )));
            }
            let images = load_idx_images_path(path, IdxSelection::Indices(&indices), noise)?;
            let side = images.first().map_or(0, |img| img.width());
            if images.iter().any(|img| img.width() != img.height()) {
                return Err(otkit::Error::Format(
                    "only square images are supported".into(),
                ));
            }
            let mut pairs = Vec::with_capacity(args.pairs);
            for k in 0..args.pairs {
                pairs.push((
                    images[2 * k].to_marginal()?,
                    images[2 * k + 1].to_marginal()?,
                ));
            }
            (pairs, side)
        }
    };

    let cost = l1_cost_matrix(m)?;
    let n = cost.n() as u64;
    let budget = args.budget.unwrap_or(n * n);
    let eta = args
        .eta
        .unwrap_or(4.0 * (cost.n() as f64).ln() / args.eps);
    let mut cfg = HeadToHeadConfig::new(eta, budget);
    cfg.checkpoints = (0..=args.checkpoints as u64)
        .map(|k| budget * k / args.checkpoints.max(1) as u64)
        .collect();
    cfg.round_objective = args.round_objective;
    cfg.threads = args.threads;

    let records = if pairs.is_empty() {
        Vec::new()
    } else {
        run_head_to_head(&pairs, &cost, &cfg)?
    };

    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("records.csv");
    std::fs::write(&csv_path, records_to_csv(&records))?;

    let summary = summarize(&records, eta, budget);
    let mut payload = serde_json::to_value(&summary)
        .map_err(|e| otkit::Error::Format(e.to_string()))?;
    if let serde_json::Value::Object(map) = &mut payload {
        map.insert("mode".into(), json!(format!("{:?}", args.mode).to_lowercase()));
        map.insert("m".into(), json!(m));
        map.insert("fg".into(), json!(args.fg));
        map.insert("eps".into(), json!(args.eps));
        map.insert("seed".into(), json!(seed));
        map.insert("requested_pairs".into(), json!(args.pairs));
    }
    let json_path = args.out.join("summary.json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&payload).map_err(|e| otkit::Error::Format(e.to_string()))?,
    )?;

    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    if let Some(ratio) = summary.final_median_ratio {
        println!("final median competitive ratio: {ratio}");
    }
    Ok(())
}
