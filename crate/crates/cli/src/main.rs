mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "stringnet", version, about = "Herd attacker swarms with string-net formations of defenders")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Scenario JSON; the bundled scenario is used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Parent directory for the per-run output directory.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Integration step in seconds.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Size the defender team and export spherical, hemispherical and planar meshes.
    Formation(commands::FormationArgs),
    /// Sweep the dominance boundary over a grid of attack directions.
    Dominance(commands::GridArgs),
    /// Run one full herding simulation.
    Simulate(commands::SimulateArgs),
    /// Simulate attacker starts over a grid of directions and radii.
    Sweep(commands::SweepArgs),
    /// Print the bundled scenario as JSON.
    Bundled,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Formation(a) => commands::formation(&cli.common, &a),
        Command::Dominance(a) => commands::dominance(&cli.common, &a),
        Command::Simulate(a) => commands::simulate(&cli.common, &a),
        Command::Sweep(a) => commands::sweep(&cli.common, &a),
        Command::Bundled => {
            print!("{}", stringnet_core::ScenarioConfig::bundled().to_json());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
