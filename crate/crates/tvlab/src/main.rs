//! Thin CLI over the harness: run a configured experiment, list the
//! available experiments, or re-verify a written report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num::BigRational;

use tvlab::harness::{
    apply_overrides, list_experiments, run_experiment, validate_config, verify_report,
};

#[derive(Parser)]
#[command(name = "tvlab", version, about = "Robust distribution-learning laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; exit 0 iff its acceptance predicate holds.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<u64>,
        /// Override the report output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the sample-size scale factor (a rational like 1/4).
        #[arg(long, value_parser = parse_scale)]
        scale: Option<BigRational>,
    },
    /// List the available experiments.
    ListExperiments,
    /// Recompute every logged error from the report's own distribution
    /// table and compare; exit 0 iff all rows agree.
    Verify {
        /// Path to a report CSV written by `run`.
        report: PathBuf,
    },
}

fn parse_scale(s: &str) -> Result<BigRational, String> {
    tvlab::dist::parse_ratio(s)
        .filter(|r| *r > BigRational::default())
        .ok_or_else(|| format!("{s:?} is not a positive rational p/q"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            out,
            scale,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let mut parsed = match validate_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            apply_overrides(&mut parsed, seed, trials, out, scale);
            match run_experiment(&parsed) {
                Ok((artifacts, summary)) => {
                    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
                    eprintln!(
                        "wrote {} and {}",
                        artifacts.csv_path.display(),
                        artifacts.json_path.display()
                    );
                    if artifacts.accept {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("acceptance predicate FAILED");
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    // Machine-readable error record on stdout, human text on stderr.
                    println!("{}", serde_json::json!({ "error": e.to_string() }));
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::ListExperiments => {
            for (name, description) in list_experiments() {
                println!("{name:<22} {description}");
            }
            ExitCode::SUCCESS
        }
        Command::Verify { report } => match verify_report(&report) {
            Ok(r) => {
                println!(
                    "{} rows: {} verified, {} skipped, 0 mismatches",
                    r.rows, r.verified, r.skipped
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
