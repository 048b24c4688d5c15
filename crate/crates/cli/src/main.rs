mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use symcocycle::Point;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] symcocycle::Error),
    /// The map does not satisfy what the command needs of it.
    #[error("{0}")]
    Hypothesis(String),
    #[error("{0}")]
    Io(String),
    #[error("{0} of {1} checks failed")]
    SuiteFailed(usize, usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::SuiteFailed(..) => 1,
            CliError::Core(e) if e.is_nonconvergence() => 3,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "symcocycle", version, about = "Cocycles and invariants of Hamiltonian maps of the plane and the cylinder")]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; scalars default to stdout, grids to ./out/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the quadrature tolerance of the scenario.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed of the probe sets and random samples.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct MapName {
    /// Name of a hamiltonian or twist; the first suitable one by default.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Path,
    Action,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalize {
    /// Zero at the basepoint.
    Pinned,
    /// Zero outside the support.
    Compact,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Writes the cocycle grid as CSV.
    Cocycle {
        #[command(flatten)]
        map: MapName,
        #[arg(long, value_enum, default_value_t = Method::Path)]
        method: Method,
        #[arg(long, value_enum, default_value_t = Normalize::Pinned)]
        normalize: Normalize,
    },
    /// Calabi invariant of a compactly supported map.
    Calabi {
        #[command(flatten)]
        map: MapName,
    },
    /// P(x, y) = K(x) − K(y) between fixed points.
    Polterovich {
        #[command(flatten)]
        map: MapName,
        #[arg(long, value_parser = parse_point, requires = "y", conflicts_with = "auto_fixed_points")]
        x: Option<Point>,
        #[arg(long, value_parser = parse_point, requires = "x")]
        y: Option<Point>,
        /// Every pair of contractible fixed points found by a scan.
        #[arg(long)]
        auto_fixed_points: bool,
    },
    /// Oscillation of the cocycle.
    Osc {
        #[command(flatten)]
        map: MapName,
    },
    /// Boundary difference of a twist's cocycle across −1 ≤ p ≤ 1.
    TwistCheck {
        #[command(flatten)]
        map: MapName,
    },
    /// Cocycle of the lift to the universal cover of the cylinder.
    Lift {
        #[command(flatten)]
        map: MapName,
        /// Fundamental domains covered by the lifted grid.
        #[arg(long, default_value_t = 2)]
        periods: usize,
    },
    /// Flux through the core loop and growth of the lifted cocycle.
    Flux {
        #[command(flatten)]
        map: MapName,
    },
    /// Lower bounds and word-ball norms of powers of a word.
    Distortion {
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 6)]
        n_max: u64,
        #[arg(long, default_value_t = 6)]
        radius: usize,
        #[arg(long, value_parser = parse_point, requires = "y")]
        x: Option<Point>,
        #[arg(long, value_parser = parse_point, requires = "x")]
        y: Option<Point>,
    },
    /// Fixed points found by a grid scan and Newton refinement.
    FixedPoints {
        #[command(flatten)]
        map: MapName,
    },
    /// Runs the numbered property suite and the scenario's own checks.
    Verify {
        /// Skips the numbered suite.
        #[arg(long)]
        scenario_only: bool,
    },
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (p, q) = s.split_once(',').ok_or_else(|| format!("expected `p,q`, got `{s}`"))?;
    let p: f64 = p.trim().parse().map_err(|e| format!("bad p in `{s}`: {e}"))?;
    let q: f64 = q.trim().parse().map_err(|e| format!("bad q in `{s}`: {e}"))?;
    Ok(Point::new(p, q))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    let path = cli.config.ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let scenario = config::Scenario::load(&path, cli.tol)?;
    let ctx = commands::Context { scenario, out: cli.out, seed: cli.seed };
    commands::dispatch(&ctx, cli.command)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let what = format!("{:?}", cli.command).split([' ', '{']).next().unwrap_or_default().to_lowercase();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("symcocycle {what}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
