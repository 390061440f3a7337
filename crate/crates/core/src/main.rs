use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wgqed_core::scenario::{self, presets, Engine, ScenarioConfig, SweepParam};
use wgqed_core::{Error, Result};

#[derive(Parser)]
#[command(name = "wgqed", version, about = "Atom decay in a semi-infinite rectangular waveguide")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a config file or a previous manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output.directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named figure preset (fig2a … fig5b).
    Preset {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run several engines on the same scenario and tabulate deviations.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated engine names.
        #[arg(long, default_value = "dde,series")]
        engines: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One run per value of a parameter, plus summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// z0, omega_a or gamma_tau1.
        #[arg(long)]
        param: String,
        /// Comma-separated values; may be empty.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_config(path: &PathBuf, out: Option<PathBuf>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = scenario::load_config(&text)?;
    if let Some(dir) = out {
        config.output.directory = dir.to_string_lossy().into_owned();
    }
    Ok(config)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Config(format!("bad {what} `{s}`"))))
        .collect()
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let config = read_config(&config, out)?;
            let outcome = scenario::run_scenario(&config)?;
            println!("{}", outcome.csv_path.display());
        }
        Command::Preset { name, out } => {
            for outcome in presets::run_preset(&name, &out)? {
                println!("{}", outcome.csv_path.display());
            }
        }
        Command::Compare { config, engines, out } => {
            let config = read_config(&config, out)?;
            let engines = engines
                .split(',')
                .map(|s| s.parse::<Engine>())
                .collect::<Result<Vec<_>>>()?;
            let report = scenario::compare_engines(&config, &engines)?;
            for r in &report.rows {
                println!(
                    "{:>9} vs {:<9} max {:.3e}  mean {:.3e}  max|·| {:.3e}",
                    r.first.name(),
                    r.second.name(),
                    r.max_abs,
                    r.mean_abs,
                    r.max_modulus
                );
            }
            println!("{}", report.path.display());
        }
        Command::Sweep { config, param, values, out } => {
            let config = read_config(&config, out)?;
            let param: SweepParam = param.parse()?;
            let values: Vec<f64> = parse_list(&values, "value")?;
            let outcome = scenario::sweep(&config, param, &values)?;
            println!("{}", outcome.summary_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
