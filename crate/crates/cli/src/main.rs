use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;

use commands::Failure;

#[derive(Parser)]
#[command(name = "tripledeck", version, about = "Triple-deck Prandtl/Benjamin-Ono solver with energy audits")]
struct Cli {
    /// Worker threads for the spectral kernels (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named initial data (small-data-certified, bo-soliton, heat-column, manufactured-convergence)
    #[arg(long)]
    pub preset: Option<String>,
    /// Take delta, eps and T* from the parameter selector
    #[arg(long)]
    pub certified: bool,
    /// Continue from a checkpoint file
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Output directory (overrides the config and TRIPLEDECK_OUTPUT)
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured run and write manifest, ledger, audits and checkpoints
    Run(RunArgs),
    /// Recompute the audit files of an existing run directory
    Audit {
        /// Run directory holding manifest.json, ledger.csv and checkpoints
        #[arg(long)]
        output: PathBuf,
    },
    /// Unforced Benjamin-Ono run, with soliton diagnostics for the bo-soliton preset
    Bo(RunArgs),
    /// Solve the Blasius problem by shooting
    Blasius {
        #[arg(long, default_value_t = 10.0)]
        eta_max: f64,
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Leading-order three-deck fields from a lower-deck checkpoint
    Reconstruct {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Viscosity values (repeatable)
        #[arg(long = "nu", required = true)]
        nus: Vec<f64>,
        /// Lower-deck height at which the main-deck matching error is measured
        #[arg(long, default_value_t = 0.5)]
        y_match: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in property checks
    Selftest,
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::config(e.to_string()))?;
    }
    match cli.command {
        Command::Run(args) => commands::run(&args, false),
        Command::Bo(args) => commands::run(&args, true),
        Command::Audit { output } => commands::audit(&output),
        Command::Blasius { eta_max, step, tol, output } => commands::blasius(eta_max, step, tol, output),
        Command::Reconstruct { checkpoint, nus, y_match, output } => commands::reconstruct(&checkpoint, &nus, y_match, output),
        Command::Selftest => commands::selftest(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
