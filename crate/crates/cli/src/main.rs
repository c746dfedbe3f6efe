use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use correlator_core::mass::MassError;
use correlator_core::resolver::ResolverError;
use correlator_core::scenario::{
    load_scenario, run, OutputFormat, RunError, RunOptions, ScenarioError,
};

const EXIT_PARSE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_TOTAL_CONFLICT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "correlator",
    about = "Evidential threat correlator: combines uncertain location, movement, \
             coverage, and separation reports and classifies the second threat."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file through the three-pass resolution pipeline.
    Run {
        /// Path to a scenario file.
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's conflict threshold tau.
        #[arg(long)]
        threshold: Option<f64>,
        /// Output format.
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Include per-step conflict attribution in table output.
        #[arg(long)]
        trace: bool,
        /// Skip pass II (evidential tests), forcing across-the-board discounting.
        #[arg(long)]
        no_tests: bool,
        /// Reserved for harness uniformity; the pipeline is deterministic
        /// and this value is ignored.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Structured,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            threshold,
            format,
            trace,
            no_tests,
            seed: _,
        } => {
            let scenario = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(err) => {
                    eprintln!("error: {err}");
                    return ExitCode::from(match err {
                        ScenarioError::Parse { .. } => EXIT_PARSE,
                        ScenarioError::Validation { .. } => EXIT_VALIDATION,
                    });
                }
            };
            let options = RunOptions {
                threshold,
                format: match format {
                    Format::Table => OutputFormat::Table,
                    Format::Structured => OutputFormat::Structured,
                },
                trace,
                no_tests,
            };
            match run(&scenario, &options) {
                Ok(output) => {
                    print!("{}", output.rendered);
                    ExitCode::SUCCESS
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    match err {
                        RunError::Resolver(ResolverError::Mass(MassError::TotalConflict {
                            ..
                        })) => ExitCode::from(EXIT_TOTAL_CONFLICT),
                        RunError::Scenario(ScenarioError::Parse { .. }) => {
                            ExitCode::from(EXIT_PARSE)
                        }
                        RunError::Scenario(ScenarioError::Validation { .. }) => {
                            ExitCode::from(EXIT_VALIDATION)
                        }
                        _ => ExitCode::FAILURE,
                    }
                }
            }
        }
    }
}
