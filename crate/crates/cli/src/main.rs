use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use clustermem_cli::{
    lifetime_artifacts, store_retrieve_artifacts, sweep_depth_artifacts, sweep_time_artifacts, write_artifacts,
    Artifact, CliError, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "clustermem", version, about = "Cluster-state quantum memory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration (defaults apply when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// RNG seed, overriding the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Output directory, overriding the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Store and retrieve the four-photon cluster state; writes the memory report and output state.
    StoreRetrieve,
    /// Optimal efficiency versus optical depth and spin decay; writes a CSV.
    SweepDepth,
    /// Motional dephasing versus dark time, analytic and Monte Carlo; writes a CSV.
    SweepTime,
    /// Lifetime figures for both beam geometries; writes and prints a report.
    Lifetime,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());

    let artifacts: Vec<Artifact> = match cli.command {
        Command::StoreRetrieve => store_retrieve_artifacts(&cfg)?,
        Command::SweepDepth => sweep_depth_artifacts(&cfg)?,
        Command::SweepTime => sweep_time_artifacts(&cfg)?,
        Command::Lifetime => lifetime_artifacts(&cfg)?,
    };
    if matches!(cli.command, Command::Lifetime) {
        print!("{}", artifacts[0].contents);
    }
    for path in write_artifacts(&dir, &artifacts)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
