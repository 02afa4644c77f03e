use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lamoo::benchmarks::REGISTRY;
use lamoo::harness::{aggregate, emit_aggregate_csv, emit_csv, fmt_float, run, write_traces, RunConfig, Trace};
use lamoo::hypervolume::hv_exact;
use lamoo::theory::{agrees, theory_grid};
use lamoo::{Error, Result};

#[derive(Parser)]
#[command(name = "lamoo", version, about = "Multi-objective optimization by learned space partitioning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the partitioning optimizer.
    Run(RunArgs),
    /// Run the same sampler on the whole box, without partitioning.
    Baseline(RunArgs),
    /// Hypervolume of the points in a CSV file.
    Hv {
        #[arg(long)]
        points: PathBuf,
        /// Comma-separated reference point.
        #[arg(long = "ref", value_delimiter = ',', required = true, allow_negative_numbers = true)]
        reference: Vec<f64>,
    },
    /// Sweep the sample-allocation theory over its parameter grid.
    Theory {
        #[arg(long)]
        grid_out: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Benchmark registry.
    Bench {
        #[command(subcommand)]
        action: BenchAction,
    },
}

#[derive(Subcommand)]
enum BenchAction {
    List,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config; repeats use consecutive seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Trace CSV; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    /// Per-iteration mean and spread over all repeats.
    #[arg(long)]
    aggregate_out: Option<PathBuf>,
}

fn run_command(args: &RunArgs, partition: bool) -> Result<()> {
    if args.repeats == 0 {
        return Err(Error::Config("--repeats must be at least 1".into()));
    }
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let configs: Vec<RunConfig> = (0..args.repeats)
        .map(|i| RunConfig {
            seed: cfg.seed.wrapping_add(i),
            ..cfg.clone()
        })
        .collect();
    let traces: Vec<Trace> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| s.spawn(move || run(c, partition).map(|o| o.trace)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    for t in &traces {
        eprintln!("seed {}: final hypervolume {}", t.seed, fmt_float(t.final_hv()));
    }
    match &args.out {
        Some(path) => emit_csv(&traces, path)?,
        None => write_traces(&traces, std::io::stdout().lock())
            .map_err(|e| Error::io("<stdout>", std::io::Error::other(e.to_string())))?,
    }
    if let Some(path) = &args.aggregate_out {
        emit_aggregate_csv(&aggregate(&traces)?, path)?;
    }
    Ok(())
}

fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { row: i + 1, message: e.to_string() })?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(p) => points.push(p),
            // a non-numeric first line is a header
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse { row: i + 1, message: e.to_string() }),
        }
    }
    Ok(points)
}

fn hv_command(points: &Path, reference: &[f64]) -> Result<()> {
    if reference.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("reference point".into()));
    }
    let pts = read_points(points)?;
    println!("{}", hv_exact(&pts, reference)?);
    Ok(())
}

fn theory_command(path: &Path, trials: usize, seed: u64) -> Result<()> {
    let rows = theory_grid(trials, seed)?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(
        w,
        "n,alpha,eta,budget_factor,k,t,lambda,bound,exact,simulated,stderr,bound_holds,simulation_agrees,bound_above_one"
    )
    .map_err(io)?;
    let mut violations = 0;
    for r in &rows {
        let p = &r.params;
        let holds = r.exact >= r.bound;
        violations += usize::from(!holds);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.n,
            p.alpha,
            p.eta,
            r.budget_factor,
            fmt_float(p.k),
            p.t,
            fmt_float(r.lambda),
            fmt_float(r.bound),
            fmt_float(r.exact),
            fmt_float(r.simulated.mean),
            fmt_float(r.simulated.stderr),
            u8::from(holds),
            u8::from(agrees(&r.simulated, r.exact)),
            u8::from(r.bound_above_one),
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    eprintln!("{} grid points, {} bound violations", rows.len(), violations);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run_command(args, true),
        Command::Baseline(args) => run_command(args, false),
        Command::Hv { points, reference } => hv_command(points, reference),
        Command::Theory { grid_out, trials, seed } => theory_command(grid_out, *trials, *seed),
        Command::Bench { action: BenchAction::List } => {
            for (name, desc) in REGISTRY {
                println!("{name}\t{desc}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
