//! Command-line harness: `run` executes the scenario named in the
//! config, `sweep` fans a key over a value list, `probe-stokes` forces
//! the manufactured-solution report. Exit status is 0 iff every verdict
//! applicable to the scenario holds.

use benard::config::{self, Scenario, SimConfig};
use benard::scenario;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "benard", about = "Bénard-system decay-verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario selected by the config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default ./out).
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sweep one config key over a comma-separated value list.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Key to sweep; `m0_radius` varies the density-blob radius.
        #[arg(long)]
        key: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the manufactured-Stokes probe report.
    ProbeStokes {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<SimConfig, String> {
    config::load_config(path).map_err(|e| e.to_string())
}

fn report(outcome: benard::scenario::ScenarioOutcome) -> ExitCode {
    print!("{}", outcome.summary);
    for v in &outcome.verdicts {
        println!(
            "{}: {}",
            v.name,
            if v.holds { "PASS" } else { "FAIL" }
        );
    }
    if outcome.ok {
        println!("all verdicts hold");
        ExitCode::SUCCESS
    } else {
        println!("verdict failure");
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => match load(&config) {
            Ok(cfg) => scenario::run_scenario(&cfg, &out),
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        },
        Command::Sweep {
            config,
            key,
            values,
            out,
        } => match load(&config) {
            Ok(mut cfg) => {
                if key != "m0_radius" && key != "blob_radius" {
                    eprintln!("sweep key must be m0_radius (blob radius), got '{key}'");
                    return ExitCode::from(2);
                }
                let parsed: Result<Vec<f64>, _> =
                    values.split(',').map(|v| v.trim().parse::<f64>()).collect();
                match parsed {
                    Ok(vals) if !vals.is_empty() => {
                        cfg.scenario = Scenario::ThresholdSweep;
                        scenario::run_threshold_sweep(&cfg, &vals, &out)
                    }
                    _ => {
                        eprintln!("--values must be a comma-separated list of numbers");
                        return ExitCode::from(2);
                    }
                }
            }
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        },
        Command::ProbeStokes { config, out } => match load(&config) {
            Ok(cfg) => scenario::run_stokes_probe(&cfg, &out),
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        },
    };
    match result {
        Ok(outcome) => report(outcome),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
