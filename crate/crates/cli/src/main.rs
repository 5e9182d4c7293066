use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use saga_cli::commands;
use saga_cli::config::{load_config, RunConfig};
use saga_cli::CliError;

/// Plan, run and validate SAGA experiments with arbitrary sampling.
#[derive(Parser)]
#[command(name = "saga", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Target {
    /// JSON run configuration.
    config: PathBuf,
    /// Overrides of the form `dotted.key=value`.
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print step sizes, rate constants and predicted iteration counts.
    Plan(Target),
    /// Run every variant for every seed and write traces.
    Run(Target),
    /// Run the exhaustive verification suite.
    Validate {
        /// Optional configuration (its `validate` and `output` sections apply).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides of the form `dotted.key=value`.
        overrides: Vec<String>,
    },
}

fn load(path: &Path, overrides: &[String]) -> Result<(RunConfig, PathBuf), CliError> {
    let config = load_config(path, overrides)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((config, base))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan(t) => {
            let (config, base) = load(&t.config, &t.overrides)?;
            print!("{}", commands::cmd_plan(&config, &base)?);
        }
        Command::Run(t) => {
            let (config, base) = load(&t.config, &t.overrides)?;
            print!("{}", commands::cmd_run(&config, &base)?);
        }
        Command::Validate { config, overrides } => {
            let config = match config {
                Some(path) => load(&path, &overrides)?.0,
                None => saga_cli::config::parse_config(r#"{"version": 1}"#, &overrides)?,
            };
            let report = commands::cmd_validate(&config)?;
            print!("{}", report.text);
            if !report.failed.is_empty() {
                return Err(CliError::Validation(report.failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("saga: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
