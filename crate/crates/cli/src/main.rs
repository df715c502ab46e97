use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qsd_cli::commands;

/// Non-Markovian two-qubit dynamics in a leaky cavity.
#[derive(Parser)]
#[command(name = "cascade-qsd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write a RESULT CSV.
    Run {
        config: PathBuf,
        /// Overrides output.path; without either, the CSV goes to stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Directory for cached coefficient fields.
        #[arg(long)]
        fields_cache: Option<PathBuf>,
    },
    /// Run every value of the sweep block and write a long-format CSV.
    Sweep {
        config: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        fields_cache: Option<PathBuf>,
    },
    /// Trace distance and concurrence difference between two RESULT CSVs.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.03)]
        threshold: f64,
    },
    /// Check sampled noise moments against their kernels.
    NoiseCheck {
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
    },
    /// Print the configuration with all defaults filled in.
    DumpConfig { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, output, fields_cache } => commands::run(&config, output, fields_cache.as_deref()),
        Command::Sweep { config, output, fields_cache } => commands::sweep(&config, output, fields_cache.as_deref()),
        Command::Compare { a, b, threshold } => commands::compare(&a, &b, threshold),
        Command::NoiseCheck { config, paths } => commands::noise(&config, paths),
        Command::DumpConfig { config } => commands::dump(&config),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
