//! Experiment runner. Exit codes: 0 success, 1 configuration or validation
//! error, 2 runtime failure, 3 oracle-suite failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mbail::config::{ExperimentConfig, ExperimentKind};
use mbail::error::Error;
use mbail::harness;

#[derive(Parser)]
#[command(name = "mbail", about = "Tabular imitation-learning experiments")]
struct Cli {
    /// JSON experiment config; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated seed list, overriding the config.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads (0 keeps the default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// GridWorld BC vs online-IL sweep over reward granularity or
    /// stochasticity (chosen by the config kind; default reward).
    GridworldSweep {
        /// Sweep environment stochasticity instead of reward granularity.
        #[arg(long)]
        stochasticity: bool,
    },
    /// Adversarial model-based imitation run with regret logging.
    MbailRun,
    /// Hard-instance gap certification and packing check.
    HardInstanceVerify,
    /// Numeric oracle suites (variance, Hedge regret, divergences).
    UnitOracles,
}

fn load_config(cli: &Cli, kind: ExperimentKind) -> Result<ExperimentConfig, Error> {
    // Any failure to load the file is a configuration error for exit-code
    // purposes, including unreadable paths and malformed JSON.
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path).map_err(|e| match e {
            Error::Config(_) | Error::Validation(_) => e,
            other => Error::Config(other.to_string()),
        })?,
        None => ExperimentConfig::standard(kind),
    };
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if let Some(seeds) = &cli.seeds {
        config.seeds = seeds.clone();
    }
    if cli.threads != 0 {
        config.threads = cli.threads;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    let kind = match &cli.command {
        Command::GridworldSweep { stochasticity: true } => {
            ExperimentKind::GridworldStochasticitySweep
        }
        Command::GridworldSweep { stochasticity: false } => ExperimentKind::GridworldRewardSweep,
        Command::MbailRun => ExperimentKind::MbailRun,
        Command::HardInstanceVerify => ExperimentKind::HardInstanceVerify,
        Command::UnitOracles => ExperimentKind::UnitOracles,
    };
    let mut config = load_config(cli, kind)?;
    // The sweep flag wins over a config kind that only selects the default.
    if matches!(cli.command, Command::GridworldSweep { .. }) {
        config.kind = kind;
    }
    if config.threads != 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::GridworldSweep { .. } => {
            let result = harness::cmd_gridworld_sweep(&config)?;
            println!("wrote {} rows to {}", result.rows.len(), result.csv_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::MbailRun => {
            let result = harness::cmd_mbail_run(&config)?;
            for s in &result.summaries {
                println!(
                    "seed {}: avg regret {:.4}, ratio {:.3}, truth rate {:.3}, rounds-to-gap {}",
                    s.seed,
                    s.final_average_regret,
                    s.sublinearity_ratio,
                    s.truth_containment_rate,
                    s.rounds_to_gap
                );
            }
            println!("wrote {}", result.csv_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::HardInstanceVerify => {
            let result = harness::cmd_hard_instance_verify(&config)?;
            let holds = result.rows.iter().filter(|r| r.holds).count();
            println!(
                "gap bound holds in {}/{} rows; packing ok: {} (size {})",
                holds,
                result.rows.len(),
                result.packing_ok,
                result.packing_size
            );
            println!("wrote {}", result.csv_path.display());
            if holds == result.rows.len() && result.packing_ok {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
        Command::UnitOracles => {
            let checks = harness::cmd_unit_oracles(&config, 100_000, 10_000)?;
            let mut all_ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                all_ok &= c.passed;
            }
            if all_ok {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e @ (Error::Config(_) | Error::Validation(_) | Error::Shape(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
