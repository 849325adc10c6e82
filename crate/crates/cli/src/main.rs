use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tippe_cli::{commands, CliError, OutDir, Scenario};

#[derive(Parser)]
#[command(
    name = "tippe",
    version,
    about = "Tippe top simulations and stability analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for sampled initial states.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate one trajectory.
    Simulate,
    /// Classify the permanent rotations on a grid of C or c1.
    StabilityScan,
    /// Family curves on the (C², E) plane.
    Smale,
    /// Reduced-flow trajectories from a grid of (K1, C).
    PhasePortrait,
    /// Claimed versus observed integrals for every friction law.
    ConservationCheck,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Validation("--scenario <path> is required".into()))?;
    let scenario = Scenario::load(path)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
    }
    let out = OutDir::create(&cli.out, &scenario.outputs.prefix)?;
    let summary = match cli.command {
        Command::Simulate => serde_json::to_string(&commands::simulate(&scenario, &out)?),
        Command::StabilityScan => {
            serde_json::to_string(&commands::stability_scan(&scenario, &out)?)
        }
        Command::Smale => serde_json::to_string(&commands::smale(&scenario, &out)?),
        Command::PhasePortrait => {
            serde_json::to_string(&commands::phase_portrait(&scenario, &out)?)
        }
        Command::ConservationCheck => {
            serde_json::to_string(&commands::conservation_check(&scenario, &out, cli.seed)?)
        }
    };
    Ok(summary?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
