//! `mcds`: instance generation, single runs, sweeps and exact optima.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mcds_core::graph::{gen_cycle_center, gen_lower_bound, gen_random_connected, load_graph};
use mcds_core::harness::{edge_prob_for_degree, run_experiment, summarize, sweep, write_csv, SweepPoint};
use mcds_core::oracle::{exact_mcds, exact_min_dominating};
use mcds_core::{DisjointnessInstance, Mode, RunConfig, WeightedGraph};

#[derive(Parser)]
#[command(name = "mcds", version, about = "Distributed minimum-weight connected dominating set on a CONGEST simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and print n, m and the diameter.
    Gen {
        #[command(subcommand)]
        generator: Generator,
        /// Output file; stdout when omitted (the summary then goes to stderr).
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
    },
    /// Run the full pipeline on a graph file and print a JSON report.
    /// Exits nonzero iff the report lists violations.
    Run(RunArgs),
    /// Run a grid of random instances and write one CSV row per run.
    /// Exits nonzero iff any row has violations.
    Sweep(SweepArgs),
    /// Exact optimum of a small graph file (at most 20 nodes).
    Oracle {
        graph: PathBuf,
        /// Minimum dominating set instead of connected dominating set.
        #[arg(long)]
        dominating: bool,
    },
}

#[derive(Subcommand)]
enum Generator {
    /// Connected Erdős–Rényi graph with uniform weights.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 100)]
        wmax: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cycle of 2k nodes with a heavy center joined to the light cycle nodes.
    CycleCenter {
        #[arg(long)]
        k: usize,
    },
    /// Parallel paths under a binary tree encoding a set-disjointness input.
    LowerBound {
        #[arg(long)]
        paths: usize,
        #[arg(long)]
        len: usize,
        /// Alice's set, comma separated, elements in 1..=paths.
        #[arg(long, value_delimiter = ',')]
        x: Vec<usize>,
        /// Bob's set, comma separated, elements in 1..=paths.
        #[arg(long, value_delimiter = ',')]
        y: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        alpha: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Currently identical to `charged`; reserved for a message-level component tool.
    Strict,
    Charged,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Strict => Mode::Strict,
            ModeArg::Charged => Mode::Charged,
        }
    }
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-edge bit budget; default 8 * ceil(log2(n + 1)).
    #[arg(long)]
    b_bits: Option<u32>,
    #[arg(long, value_enum, default_value = "charged")]
    mode: ModeArg,
    /// Attach the exact optimum and the ratio (graphs with at most 20 nodes).
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    round_limit: Option<u64>,
}

impl ConfigArgs {
    fn config(&self) -> RunConfig {
        let mut cfg = RunConfig {
            b_bits: self.b_bits,
            seed: self.seed,
            mode: self.mode.into(),
            ..RunConfig::default()
        };
        if let Some(limit) = self.round_limit {
            cfg.round_limit = limit;
        }
        cfg
    }
}

#[derive(Args)]
struct RunArgs {
    graph: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Write the per-phase and per-iteration trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Node counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "25,50,100,200")]
    sizes: Vec<usize>,
    /// Number of seeds per size, counting up from --seed.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Expected average degree; sets the edge probability per size.
    #[arg(long, default_value_t = 6.0)]
    degree: f64,
    #[arg(long, default_value_t = 100)]
    wmax: u64,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// CSV output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn read_graph(path: &Path) -> Result<WeightedGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_graph(&text).with_context(|| format!("loading {}", path.display()))
}

fn generate(generator: &Generator) -> Result<WeightedGraph> {
    Ok(match *generator {
        Generator::Random { n, p, wmax, seed } => gen_random_connected(n, p, wmax, seed)?,
        Generator::CycleCenter { k } => gen_cycle_center(k)?,
        Generator::LowerBound {
            paths,
            len,
            ref x,
            ref y,
            alpha,
        } => {
            let inst = DisjointnessInstance::new(paths, x.iter().copied(), y.iter().copied(), alpha)?;
            gen_lower_bound(&inst, paths, len)?.0
        }
    })
}

fn cmd_gen(generator: &Generator, out: Option<&Path>) -> Result<ExitCode> {
    let g = generate(generator)?;
    let doc = g.to_json();
    let summary = format!("n={} m={} diameter={}", g.node_count(), g.edge_count(), g.diameter());
    match out {
        Some(path) => {
            fs::write(path, doc).with_context(|| format!("writing {}", path.display()))?;
            println!("{summary}");
        }
        None => {
            print!("{doc}");
            eprintln!("{summary}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let g = read_graph(&args.graph)?;
    let instance = args.graph.display().to_string();
    let (report, trace) = run_experiment(&g, &instance, &args.cfg.config(), args.cfg.oracle);
    if let (Some(path), Some(trace)) = (&args.trace, &trace) {
        let text = serde_json::to_string_pretty(trace)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(exit_for(report.is_success()))
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode> {
    if args.sizes.is_empty() || args.seeds == 0 {
        bail!("sweep needs at least one size and one seed");
    }
    let points: Vec<SweepPoint> = args
        .sizes
        .iter()
        .flat_map(|&n| {
            let first = args.cfg.seed;
            (first..first + args.seeds).map(move |seed| SweepPoint {
                n,
                edge_prob: edge_prob_for_degree(n, args.degree),
                weight_max: args.wmax,
                seed,
            })
        })
        .collect();
    let rows = sweep(&points, &args.cfg.config(), args.cfg.oracle);
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
            write_csv(&rows, file)?;
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    let mut err = io::stderr().lock();
    writeln!(err, "{:<16} {:>14} {:>14}", "column", "median", "max")?;
    for s in summarize(&rows) {
        writeln!(err, "{:<16} {:>14.3} {:>14.3}", s.column, s.median, s.max)?;
    }
    let failed = rows.iter().filter(|r| !r.report.is_success()).count();
    if failed > 0 {
        writeln!(err, "{failed} of {} rows failed", rows.len())?;
    }
    Ok(exit_for(failed == 0))
}

fn cmd_oracle(path: &Path, dominating: bool) -> Result<ExitCode> {
    let g = read_graph(path)?;
    let result = if dominating {
        exact_min_dominating(&g)?
    } else {
        exact_mcds(&g)?
    };
    let doc = serde_json::json!({
        "best_set": result.best_set,
        "best_cost": result.best_cost,
        "explored": result.explored,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(ExitCode::SUCCESS)
}

fn exit_for(success: bool) -> ExitCode {
    if success {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// Bad parameters and unreadable inputs exit with 2, like clap usage errors.
fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen { generator, out } => cmd_gen(generator, out.as_deref()),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Oracle { graph, dominating } => cmd_oracle(graph, *dominating),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
