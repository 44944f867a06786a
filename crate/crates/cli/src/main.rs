//! `wedge-hybrid`: spectra, resonances, sweeps, scattering and kernels of the
//! half-line + wedge hybrid from the command line.

mod commands;
mod config;
mod output;
mod selftest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use output::Format;

/// Environment variable that fixes the worker-thread count.
pub const THREADS_ENV: &str = "WEDGE_HYBRID_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] wedge_hybrid::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// The command produced output but some points failed.
    #[error("{0}")]
    Partial(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Engine(e) if e.is_domain_like() => 1,
            CliError::Engine(_) => 2,
            CliError::Io(_) => 1,
            CliError::Partial(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wedge-hybrid", version, about = "Spectrum, resonances and scattering of a half-line glued to a wedge vertex")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Io {
    /// key=value file or an earlier JSON output; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
    /// write here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Coupling {
    /// wedge parameter β in [1/2, 1); the opening angle is π/β
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the real spectrum.
    Spectrum {
        #[command(flatten)]
        coupling: Coupling,
        /// upper energy cut (default min(350, λ²_{6,β}))
        #[arg(long, allow_hyphen_values = true)]
        emax: Option<String>,
        /// lower end of the discrete-spectrum search
        #[arg(long = "lambda-min", allow_hyphen_values = true)]
        lambda_min: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// Locate resonances for a list of parent indices.
    Resonances {
        #[command(flatten)]
        coupling: Coupling,
        /// parent indices, e.g. 1 or 1,2,3
        #[arg(long)]
        m: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// Follow one resonance along an ε grid.
    SweepEps {
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<String>,
        #[arg(long)]
        m: Option<String>,
        /// grid start:stop:step or a comma list
        #[arg(long)]
        eps: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// One resonance for each β of a grid.
    SweepBeta {
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        eps: Option<String>,
        #[arg(long)]
        m: Option<String>,
        /// grid start:stop:step or a comma list
        #[arg(long)]
        beta: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// Reflection amplitude and unwrapped phase along a momentum grid.
    Scatter {
        #[command(flatten)]
        coupling: Coupling,
        /// momentum grid start:stop:step or a comma list
        #[arg(long)]
        k: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// Evaluate a resolvent kernel.
    Kernel {
        #[command(flatten)]
        coupling: Coupling,
        /// lead | friedrichs | alpha | hybrid
        #[arg(long)]
        block: Option<String>,
        /// spectral parameter as re,im
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        /// lead coordinates
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        /// wedge points as r,theta
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        q: Option<String>,
        /// largest accepted truncation estimate of the mode sum
        #[arg(long = "mode-tol")]
        mode_tol: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// Run the closed-form oracle checks.
    Selftest,
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        // a second initialization (tests calling run twice) is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 64 } else { 0 };
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Selftest => selftest::run(),
        cmd => commands::execute(cmd),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("wedge-hybrid: {e}");
            e.exit_code()
        }
    }
}

fn main() {
    std::process::exit(run(std::env::args_os()));
}
