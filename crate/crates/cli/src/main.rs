//! `sfem`: spectral reports, solves, convergence tables, benchmarks and
//! self-verification for the fast high-order FEM Poisson solvers.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 verification failure,
//! 3 runtime or solver failure.

mod commands;
mod config;
mod tables;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sfem::Algorithm;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Config {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("{context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: sfem::Error,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Verify(_) => 2,
            CliError::Solver { .. } | CliError::Io { .. } => 3,
        }
    }

    pub fn solver(context: impl Into<String>) -> impl FnOnce(sfem::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Solver { context, source }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

#[derive(Parser, Debug)]
#[command(name = "sfem", version, about = "Fast direct solvers for high-order FEM Poisson problems on boxes")]
struct Cli {
    /// Worker threads for the solvers (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for cached spectral tables; tables are read from it when
    /// present and written to it otherwise.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues of the 1D problem and element spectrum diagnostics as CSV.
    Spectrum {
        /// Element order n (1..=9).
        #[arg(short = 'n', long)]
        order: usize,
        /// Number of elements K (>= 2).
        #[arg(short = 'k', long)]
        elements: usize,
        /// Check the element spectra in double-double precision.
        #[arg(long)]
        extended: bool,
        /// Output file (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solves the problem described by a config file.
    Solve {
        config: PathBuf,
    },
    /// Errors and convergence ratios of a built-in case as CSV.
    Convergence {
        /// poisson1d, poisson2d or poisson3d.
        #[arg(long)]
        case: String,
        /// Element orders, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        orders: Vec<usize>,
        /// Element counts, comma separated, ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        elements: Vec<usize>,
        #[arg(long, default_value = "a", value_parser = parse_algorithm)]
        algorithm: Algorithm,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Median solve times and consecutive-K ratios as CSV.
    Bench {
        /// Space dimension (1, 2 or 3); uses the built-in case of that dimension.
        #[arg(long)]
        dim: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        orders: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        elements: Vec<usize>,
        #[arg(long, default_value = "a", value_parser = parse_algorithm)]
        algorithm: Algorithm,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Include forming the load vector in the timed region.
        #[arg(long)]
        include_load: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Runs the invariant suites and reports PASS/FAIL per invariant.
    Verify {
        #[arg(value_enum, default_value_t = Level::Quick)]
        level: Level,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set up {threads} threads: {e}")))?;
    }
    let cache = cli.cache_dir.as_deref();
    match cli.command {
        Command::Spectrum {
            order,
            elements,
            extended,
            output,
        } => commands::spectrum(order, elements, extended, output.as_deref(), cache),
        Command::Solve { config } => commands::solve(&config, cache),
        Command::Convergence {
            case,
            orders,
            elements,
            algorithm,
            output,
        } => commands::convergence(&case, &orders, &elements, algorithm, output.as_deref(), cache),
        Command::Bench {
            dim,
            orders,
            elements,
            algorithm,
            reps,
            include_load,
            output,
        } => commands::bench(
            &commands::BenchPlan {
                dim,
                orders,
                elements,
                algorithm,
                reps,
                include_load,
            },
            output.as_deref(),
            cache,
        ),
        Command::Verify { level } => verify::run(level, cache),
    }
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
        Err(e) => {
            eprintln!("sfem: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
