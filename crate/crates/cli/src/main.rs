mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use bikeshift::report::TableFormat;
use clap::{Parser, Subcommand, ValueEnum};

use commands::{Outcome, ReproduceArgs};
use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "bikeshift", version, about = "PLS analysis of bicycle-count change rates")]
struct Cli {
    /// JSON run configuration. Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print results and errors as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// More detail on stdout and debug logging on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download daily counts for every station, through the response cache.
    Fetch,
    /// Build profiles, transition rates and the frame table from raw inputs.
    Derive,
    /// Fit one model per transition and write models and tables.
    Analyze,
    /// Re-render tables and figure data from saved models.
    Report {
        #[arg(long, value_enum, default_value = "both")]
        format: FormatArg,
    },
    /// Refit the bundled reference stations and check the expected tables.
    Reproduce {
        /// Frame table to use instead of the bundled one.
        #[arg(long)]
        table1: Option<PathBuf>,
        /// Expected tables to use instead of the bundled ones.
        #[arg(long)]
        golden: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    log::debug!("configuration: {cfg:?}");
    match &cli.command {
        Command::Fetch => commands::cmd_fetch(&cfg),
        Command::Derive => commands::cmd_derive(&cfg),
        Command::Analyze => commands::cmd_analyze(&cfg),
        Command::Report { format } => {
            let formats = match format {
                FormatArg::Csv => vec![TableFormat::Csv],
                FormatArg::Markdown => vec![TableFormat::Markdown],
                FormatArg::Both => vec![TableFormat::Csv, TableFormat::Markdown],
            };
            commands::cmd_report(&cfg, &formats)
        }
        Command::Reproduce { table1, golden, seed } => commands::cmd_reproduce(
            &cfg,
            &ReproduceArgs {
                table1: table1.clone(),
                golden: golden.clone(),
                seed: *seed,
                verbose: cli.verbose,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli) {
        Ok(outcome) => {
            if cli.json {
                println!("{}", outcome.json);
            } else {
                println!("{}", outcome.text);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            if cli.json {
                println!("{}", serde_json::json!({"error": e.kind(), "message": e.to_string()}));
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
