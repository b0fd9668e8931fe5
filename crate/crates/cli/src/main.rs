//! capsim: batch experiment runner for wireless multihop capacity
//! simulations under non-uniform traffic.
//!
//! Subcommands: `run` (simulate instances), `verify` (Monte Carlo claim
//! checks), `bounds` (closed-form bound tables), `sweep` (scaling campaigns
//! with a log-log fit). Exit codes: 0 success, 1 runtime failure, 2 usage
//! error, 3 strict-verification failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CommandError;
use config::{ConfigFile, ExperimentConfig, Format};

#[derive(Parser)]
#[command(name = "capsim", version, about = "Capacity simulator and bound calculator for wireless multihop networks under non-uniform traffic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate instances, build routes, simulate TDMA frames, write artifacts
    Run(CommonArgs),
    /// Monte Carlo verification of the concentration and SINR-floor claims
    Verify(CommonArgs),
    /// Closed-form capacity bound tables over the n grid
    Bounds(CommonArgs),
    /// Scaling sweep over the n grid with a fitted throughput exponent
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Traffic model: asymmetric | multicast | cluster | hybrid
    #[arg(long)]
    model: Option<String>,
    /// Node count(s); comma-separated for a grid
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Secondary-node exponent in (0, 1)
    #[arg(long)]
    d: Option<f64>,
    /// Independent trials per grid point
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed for the deterministic trial fan-out
    #[arg(long)]
    seed: Option<u64>,
    /// Fading model: trivial | exponential | nakagami | ricean
    #[arg(long)]
    fading: Option<String>,
    /// Decay exponent (> 2)
    #[arg(long)]
    alpha: Option<f64>,
    /// Channel bandwidth W in Hz
    #[arg(long = "W")]
    w: Option<f64>,
    /// SINR gap Gamma (>= 1)
    #[arg(long = "gamma-cap")]
    gamma_cap: Option<f64>,
    /// Output directory for artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact formats to write
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Cap on parallel workers (0 = all cores); results do not depend on it
    #[arg(long)]
    workers: Option<usize>,
    /// Exit 3 if any verification threshold is missed
    #[arg(long)]
    strict: bool,
    /// Print the plan without computing
    #[arg(long)]
    dry_run: bool,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": msg, "kind": "usage" }));
    ExitCode::from(2)
}

fn runtime_error(msg: &str) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": msg, "kind": "runtime" }));
    ExitCode::from(1)
}

fn resolve(args: CommonArgs) -> Result<ExperimentConfig, ExitCode> {
    let file: ConfigFile = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage_error(&format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| usage_error(&format!("invalid config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    ExperimentConfig::resolve(
        file,
        args.model,
        args.d,
        args.n,
        args.trials,
        args.fading,
        args.alpha,
        args.w,
        args.gamma_cap,
        args.seed,
        args.out,
        args.format,
        args.workers,
        args.strict,
        args.dry_run,
    )
    .map_err(|e| usage_error(&e.0))
}

type Runner = fn(&ExperimentConfig) -> Result<(), CommandError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, runner): (ExperimentConfig, Runner) =
        match cli.command {
            Command::Run(args) => match resolve(args) {
                Ok(c) => (c, commands::cmd_run),
                Err(code) => return code,
            },
            Command::Verify(args) => match resolve(args) {
                Ok(c) => (c, commands::cmd_verify),
                Err(code) => return code,
            },
            Command::Bounds(args) => {
                let c = match resolve(args) {
                    Ok(c) => c,
                    Err(code) => return code,
                };
                if let Err(e) = c.check_regime_for_bounds() {
                    return usage_error(&e.0);
                }
                (c, commands::cmd_bounds)
            }
            Command::Sweep(args) => match resolve(args) {
                Ok(c) => (c, commands::cmd_sweep),
                Err(code) => return code,
            },
        };

    // a worker cap applies to everything the command does; results are
    // identical for any cap
    let outcome = if config.workers > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(config.workers).build() {
            Ok(pool) => pool.install(|| runner(&config)),
            Err(e) => return runtime_error(&format!("worker pool: {e}")),
        }
    } else {
        runner(&config)
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CommandError::Runtime(msg)) => runtime_error(&msg),
        Err(CommandError::StrictFailed) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": "strict verification failed", "kind": "strict" })
            );
            ExitCode::from(3)
        }
    }
}
