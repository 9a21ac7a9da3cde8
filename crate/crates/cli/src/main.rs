//! `skewgbm`: classification, pricing, free boundaries, sweeps, verification
//! and oracle comparison for the perpetual call on a skew GBM.
//!
//! Exit codes: 0 ok, 1 internal or usage error, 2 assumption violated
//! (`r ≤ b`), 3 degenerate β, 4 verification failure, 5 oracle disagreement.

mod commands;
mod params;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use skewgbm::Error;

use params::{parse_list, FloatList, ParamArgs};

#[derive(Debug, Parser)]
#[command(name = "skewgbm", version, about = "Perpetual American call on a skew geometric Brownian motion")]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and Monte Carlo.
    #[arg(long, global = true, env = "SKEWGBM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Vary {
    Z,
    Beta,
    B,
    Sigma,
}

impl Vary {
    pub fn name(self) -> &'static str {
        match self {
            Vary::Z => "z",
            Vary::Beta => "beta",
            Vary::B => "b",
            Vary::Sigma => "sigma",
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Case, characteristic roots and critical points as JSON.
    Classify {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// CSV of x, v, one-sided derivatives and stop/continue flags.
    Price {
        #[command(flatten)]
        params: ParamArgs,
        /// Spots; defaults to a grid over the interesting range.
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        x: Option<FloatList>,
        /// Price the classical call (β = 0); z and beta are ignored.
        #[arg(long)]
        gbm: bool,
    },
    /// CSV of free boundaries against one swept parameter.
    Boundary {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        vary: Vary,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
    /// Tidy CSV of value-function curves, one per value of the swept parameter.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        vary: Option<Vary>,
        /// Values of the swept parameter.
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        values: Option<FloatList>,
        /// Right end of the x range; defaults past the last free boundary.
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long, default_value_t = 400)]
        points: usize,
    },
    /// Variational-inequality checks as JSON; exits 4 if any fails.
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 4096)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-8, allow_hyphen_values = true)]
        tol_gen: f64,
        #[arg(long, default_value_t = 1e-10, allow_hyphen_values = true)]
        tol_obs: f64,
    },
    /// Compare with a numerical oracle; exits 5 on disagreement.
    Oracle {
        #[command(subcommand)]
        which: Oracle,
    },
}

#[derive(Debug, Subcommand)]
enum Oracle {
    /// Projected-SOR obstacle solver; CSV of both solutions.
    Fd {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 4000)]
        nodes: usize,
        /// Largest acceptable `max |diff|/max(v, K)`.
        #[arg(long, default_value_t = 5e-3)]
        tol: f64,
    },
    /// Monte Carlo estimate at one spot; JSON.
    Mc {
        #[command(flatten)]
        params: ParamArgs,
        /// Spot; defaults to K.
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Usage(String),
    Io(io::Error),
    Verification,
    Oracle(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.into())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(Error::AssumptionViolated { .. }) => 2,
            Failure::Core(Error::DegenerateBeta) => 3,
            Failure::Verification => 4,
            Failure::Oracle(_) => 5,
            _ => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(Error::DegenerateBeta) => format!("{} (`skewgbm price --gbm`)", Error::DegenerateBeta),
            Failure::Core(e) => e.to_string(),
            Failure::Usage(s) => s.clone(),
            Failure::Io(e) => format!("i/o: {e}"),
            Failure::Verification => "verification failed".into(),
            Failure::Oracle(s) => format!("oracle disagreement: {s}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    let mut out: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let res = match cli.command {
        Command::Classify { params } => commands::classify(&params.resolve()?, &mut out),
        Command::Price { params, x, gbm } => commands::price(&params, x.map(|l| l.0), gbm, &mut out),
        Command::Boundary { params, vary, lo, hi, count } => {
            commands::boundary(&params.resolve()?, vary, lo, hi, count, &mut out)
        }
        Command::Sweep { params, vary, values, x_max, points } => {
            commands::sweep(&params, vary, values.map(|l| l.0), x_max, points, &mut out)
        }
        Command::Verify { params, nodes, tol_gen, tol_obs } => {
            commands::verify(&params.resolve()?, nodes, tol_gen, tol_obs, &mut out)
        }
        Command::Oracle { which: Oracle::Fd { params, nodes, tol } } => {
            commands::oracle_fd(&params.resolve()?, nodes, tol, &mut out)
        }
        Command::Oracle { which: Oracle::Mc { params, x0, paths, seed } } => {
            commands::oracle_mc(&params.resolve()?, x0, paths, seed, &mut out)
        }
    };
    out.flush()?;
    res
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("skewgbm: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
