use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irs_thz::harness::csv::{codebook_csv, estimate_csv, mp_csv, quant_csv, rate_csv};
use irs_thz::harness::{
    codebook_patterns, quant_table, run_mp_experiment, run_rate_experiment, trace_estimates, ScenarioConfig,
};
use irs_thz::Error;

/// Beam training and transmission experiments for IRS-assisted THz MIMO links.
#[derive(Parser)]
#[command(name = "irs-thz", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; unset keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Monte Carlo trials (overrides the config file).
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,
    /// Output CSV file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Gain of every codeword over a sweep of probe angles.
    Codebook,
    /// Bottom-stage misalignment probability versus SNR.
    MpCurve,
    /// Spectral efficiency versus transmit power.
    RateCurve,
    /// Per-IRS true and estimated angles (one trial unless --trials is set).
    Estimate,
    /// Worst and average quantization error table.
    QuantTable,
}

fn load(common: &Common, default_trials: Option<usize>) -> irs_thz::Result<ScenarioConfig> {
    let mut config = match &common.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(trials) = common.trials.or(default_trials) {
        config.trials = trials;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> irs_thz::Result<String> {
    let single = matches!(cli.command, Command::Estimate).then_some(1);
    let config = load(&cli.common, single)?;
    Ok(match cli.command {
        Command::Codebook => codebook_csv(&codebook_patterns(&config)?),
        Command::MpCurve => mp_csv(&run_mp_experiment(&config)?),
        Command::RateCurve => rate_csv(&run_rate_experiment(&config)?),
        Command::Estimate => estimate_csv(&trace_estimates(&config)?),
        Command::QuantTable => quant_csv(&quant_table(&config)?),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let csv = match run(&cli) {
        Ok(csv) => csv,
        Err(e @ Error::Config(_)) => {
            eprintln!("irs-thz: configuration error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("irs-thz: {e}");
            return ExitCode::FAILURE;
        }
    };
    let written = match &cli.common.out {
        Some(path) => std::fs::write(path, csv).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{csv}");
            Ok(())
        }
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("irs-thz: {msg}");
            ExitCode::FAILURE
        }
    }
}
