//! Experiment runner for the reversible momentum-network library.
//!
//! Every subcommand is a pure function of its flags and seed: it writes a
//! JSON run manifest plus RFC-4180 CSV artifacts into the output directory,
//! and re-running with the same flags reproduces those files byte for byte.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical divergence.

mod commands;
mod runner;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use momrev_core::batch;
use momrev_core::momentum_net::Gamma;
use momrev_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "momrev",
    version,
    about = "Reversible momentum-network experiments: training demos, memory instrumentation, linear-dynamics tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args, Debug, Clone)]
struct GlobalOpts {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory (the MOMREV_OUT environment variable overrides this).
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Velocity mixing coefficient as a ratio N/D in [0, 1), e.g. 9/10 or 0.
    #[arg(long, global = true, default_value = "9/10")]
    gamma: String,

    /// Fractional bits of the fixed-point grid.
    #[arg(long, global = true, default_value_t = 32)]
    frac_bits: u32,

    /// Network depth; each command documents its default.
    #[arg(long, global = true)]
    depth: Option<usize>,

    /// Training iterations; each command documents its default.
    #[arg(long, global = true)]
    epochs: Option<usize>,

    /// Worker threads for per-sample parallelism: 1 = sequential (default),
    /// 0 = one per core.  Reduction order is fixed either way.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train momentum vs. plain residual nets to separate four nested rings.
    TrainRings(commands::rings::RingsOpts),
    /// Train tied-weight nets on the 1-D map x ↦ −x³ and emit trajectories.
    TrainCubic(commands::cubic::CubicOpts),
    /// Sparse-coding benchmark: ISTA and three unrolled networks across depths.
    Lista(commands::lista::ListaOpts),
    /// Measure information-buffer growth and live activations vs. prediction.
    Memcheck(commands::memcheck::MemcheckOpts),
    /// Tables for the linear theory: shrink-floor curve, representability,
    /// coupled-block instability sampling.
    AnalyzeLinear(commands::linear::LinearOpts),
    /// Integrator checks: damping-limit convergence and closed-form targets.
    Odecheck(commands::ode::OdeOpts),
}

/// Flag values every command receives after resolution (env override, gamma
/// parsing, thread setup).
pub struct Global {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub gamma: Gamma,
    pub gamma_text: String,
    pub frac_bits: u32,
    pub depth: Option<usize>,
    pub epochs: Option<usize>,
    pub threads: usize,
}

fn resolve(global: &GlobalOpts) -> Result<Global, Error> {
    let gamma = Gamma::parse(&global.gamma)?;
    let out_dir = std::env::var_os("MOMREV_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| global.out_dir.clone());
    batch::configure_threads(global.threads)?;
    Ok(Global {
        seed: global.seed,
        out_dir,
        gamma,
        gamma_text: global.gamma.clone(),
        frac_bits: global.frac_bits,
        depth: global.depth,
        epochs: global.epochs,
        threads: global.threads,
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    let g = resolve(&cli.global)?;
    match cli.command {
        Command::TrainRings(opts) => commands::rings::run(&g, &opts),
        Command::TrainCubic(opts) => commands::cubic::run(&g, &opts),
        Command::Lista(opts) => commands::lista::run(&g, &opts),
        Command::Memcheck(opts) => commands::memcheck::run(&g, &opts),
        Command::AnalyzeLinear(opts) => commands::linear::run(&g, &opts),
        Command::Odecheck(opts) => commands::ode::run(&g, &opts),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Divergence(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
