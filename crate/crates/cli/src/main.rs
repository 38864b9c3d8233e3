use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcf::chain::DEFAULT_SEED;
use mcf::transfer::{Interpolation, DEFAULT_GRID_SIZE, DEFAULT_TAIL_TOL};

// stdout writes that end the process quietly once the reader has gone away,
// e.g. when piped into `head`
macro_rules! println {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        if writeln!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

macro_rules! print {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        if write!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

mod commands;

/// Base-m Chan continued fractions: expansions, invariant measure,
/// transfer operator, digit chain and Gauss–Kuzmin statistics.
#[derive(Debug, Parser)]
#[command(name = "mcf", version, about)]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct RunConfig {
    /// Base of the expansion.
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    m: u32,
    /// Bound on the neglected branch mass of the transfer operator.
    #[arg(long, global = true, default_value_t = DEFAULT_TAIL_TOL, value_parser = positive)]
    tail_tol: f64,
    /// Target error for adaptive quadrature.
    #[arg(long, global = true, default_value_t = 1e-10, value_parser = positive)]
    quad_tol: f64,
    /// Nodes of uniform grids.
    #[arg(long, global = true, default_value_t = DEFAULT_GRID_SIZE, value_parser = grid_size)]
    grid_size: usize,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InterpArg {
    Linear,
    StepLeft,
    Chebyshev,
}

impl From<InterpArg> for Interpolation {
    fn from(a: InterpArg) -> Self {
        match a {
            InterpArg::Linear => Interpolation::Linear,
            InterpArg::StepLeft => Interpolation::StepLeft,
            InterpArg::Chebyshev => Interpolation::Chebyshev,
        }
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn grid_size(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 17 => Ok(n),
        _ => Err(format!("grid size must be an integer >= 17, got {s:?}")),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Digits of x; `p/q` is expanded exactly, a decimal in floating point.
    Expand {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value_t = mcf::cf::DEFAULT_MAX_DIGITS)]
        max_digits: usize,
    },
    /// Value of a digit sequence such as `1,2,1` or `1,2,inf`.
    Eval {
        #[arg(long)]
        digits: String,
        /// Tail value t: evaluates [[digits, t]] instead.
        #[arg(long)]
        tail: Option<String>,
    },
    /// Fundamental interval of a digit prefix.
    Interval {
        #[arg(long)]
        digits: String,
    },
    /// The invariant measure.
    Measure {
        #[command(subcommand)]
        command: MeasureCommand,
    },
    /// The transfer operator on grid functions.
    Pf {
        #[command(subcommand)]
        command: PfCommand,
    },
    /// Runs the digit/state chain and prints `step,digit,state`.
    Simulate {
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "0")]
        t0: String,
    },
    /// Stationarity residuals of the chain kernel on u = j/grid.
    Stationarity {
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Gauss–Kuzmin decay curve.
    Gk {
        /// Number of iterations.
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// `lebesgue` or a CSV density file.
        #[arg(long, default_value = "lebesgue")]
        mu0: String,
        /// Interpolation for a density file without a sidecar.
        #[arg(long, value_enum, default_value = "linear")]
        interp: InterpArg,
        /// Writes the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also writes the curve as `n,e_n` CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Base size of the sup-distance grid.
        #[arg(long, default_value_t = DEFAULT_GRID_SIZE, value_parser = grid_size)]
        x_grid: usize,
        /// Compares with a Monte Carlo run of this many samples at n = 1, 3, 5.
        #[arg(long)]
        monte_carlo: Option<usize>,
    },
    /// Runs the invariant suite; exits nonzero on any failure.
    Selftest,
}

#[derive(Debug, Subcommand)]
enum MeasureCommand {
    /// Distribution function of gamma_m at x.
    Cdf {
        #[arg(long)]
        x: String,
    },
    /// Density of gamma_m at x.
    Density {
        #[arg(long)]
        x: String,
    },
    /// gamma_m(T^{-1}[0,u)) against gamma_m([0,u)) on u = j/grid.
    Invariance {
        #[arg(long, default_value_t = 1000)]
        grid: usize,
    },
    /// Measure of a rectangle and of its image under the natural extension.
    ExtensionCheck {
        #[arg(long)]
        x_lo: String,
        #[arg(long)]
        x_hi: String,
        #[arg(long)]
        y_lo: String,
        #[arg(long)]
        y_hi: String,
    },
}

#[derive(Debug, Args)]
struct GridInput {
    /// CSV file with `node,value` rows.
    #[arg(long)]
    input: PathBuf,
    /// Interpolation when the file has no JSON sidecar.
    #[arg(long, value_enum, default_value = "linear")]
    interp: InterpArg,
}

#[derive(Debug, Subcommand)]
enum PfCommand {
    /// One application of the operator.
    Apply {
        #[command(flatten)]
        grid: GridInput,
        /// Output CSV; the metadata sidecar goes next to it.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// n applications of the operator.
    Iterate {
        #[command(flatten)]
        grid: GridInput,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Grid variation of f and of its image, with the bound K_m var f.
    Variation {
        #[command(flatten)]
        grid: GridInput,
    },
}

fn init_threads() {
    if let Some(n) = std::env::var("MCF_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // a second initialisation attempt is harmless
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match commands::run(&cli.config, &cli.command) {
        Ok(code) => code,
        Err(e) => {
            let obj = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            println!("{obj}");
            ExitCode::from(1)
        }
    }
}
