use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nhsht_core::Scheme;
use nhsht_harness::campaign::prepare;
use nhsht_harness::config::{ExperimentConfig, DEFAULT_TRIALS};
use nhsht_harness::output::{bounds_csv, emit_bounds, emit_outputs, write_file, CONFIG_COPY};
use nhsht_harness::{run_campaign, HarnessError};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "nhsht", version, about = "Cost-aware sequential hypothesis testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the guiding policy of one scheme as JSON.
    SolvePolicy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scheme: Scheme,
    },
    /// Run the Monte Carlo campaign described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the bound curves as CSV and write CSV/JSON files.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark instance, all three schemes and both bound curves.
    ReproduceFig2 {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

#[derive(Serialize)]
struct PolicyDump<'a> {
    scheme: Scheme,
    lambdas: &'a [Vec<f64>],
    objective_values: &'a [f64],
}

fn run_and_emit(config: &ExperimentConfig, workers: usize, out: &Path) -> Result<(), HarnessError> {
    let result = run_campaign(config, workers)?;
    let written = emit_outputs(&result, out)?;
    for c in result.cells.iter().filter(|c| c.flagged) {
        eprintln!("warning: {} at delta={} hit the sample cap in {} trials", c.scheme, c.delta, c.capped_trials);
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::SolvePolicy { config, scheme } => {
            let mut config = ExperimentConfig::load(&config)?;
            config.schemes = vec![scheme];
            let prepared = prepare(&config)?;
            let policy = &prepared.policies[0];
            let dump = PolicyDump {
                scheme: policy.scheme,
                lambdas: &policy.lambdas,
                objective_values: &policy.objective_values,
            };
            println!("{}", serde_json::to_string_pretty(&dump)?);
            Ok(())
        }
        Command::Run { config: path, workers, out } => {
            let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
            let config = ExperimentConfig::from_toml_str(&text)?;
            let out = out.unwrap_or_else(|| config.output_dir.clone());
            run_and_emit(&config, workers, &out)?;
            write_file(&out.join(CONFIG_COPY), &text)
        }
        Command::Bounds { config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let out = out.unwrap_or_else(|| config.output_dir.clone());
            let prepared = prepare(&config)?;
            emit_bounds(&prepared.bounds, &out)?;
            print!("{}", bounds_csv(&prepared.bounds));
            Ok(())
        }
        Command::ReproduceFig2 { seed, trials, out, workers } => {
            let config = ExperimentConfig::paper(seed, trials, out.clone()).resolve()?;
            run_and_emit(&config, workers, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
