use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zer::cli::{self, Artifact, CliError, Preset};

#[derive(Parser)]
#[command(name = "zer", version, about = "Zipper entanglement renormalization of 1D free-fermion ground states")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the renormalization and write the requested artifacts.
    Run {
        /// TOML configuration; layered over --preset when both are given.
        config: Option<PathBuf>,
        /// Output directory (overrides outputs.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// ssh, nn or extended.
        #[arg(long)]
        preset: Option<String>,
        /// Comma-separated artifact list (overrides outputs.artifacts).
        #[arg(long, value_delimiter = ',')]
        artifacts: Option<Vec<String>>,
    },
    /// Validate a configuration and print it with defaults applied.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    match dispatch(Args::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { config } => {
            let config = cli::parse_config(&config)?;
            print!("{}", config.echo());
            Ok(())
        }
        Command::Run {
            config,
            out,
            preset,
            artifacts,
        } => {
            let preset = preset.map(|p| p.parse::<Preset>()).transpose()?;
            let mut config = cli::load(config.as_deref(), preset)?;
            if let Some(dir) = out {
                config.outputs.dir = dir;
            }
            if let Some(list) = artifacts {
                config.outputs.artifacts = list.iter().map(|a| a.parse::<Artifact>()).collect::<Result<_, _>>()?;
                config.validate()?;
            }
            let summary = cli::run(&config)?;
            println!("termination: {}", summary.termination);
            println!("core modes: {}", summary.core_modes);
            println!("nontrivial steps: {}", summary.nontrivial_steps);
            println!("max |<c^dag_x c_0> error|: {}", cli::fmt_real(summary.max_correlation_error));
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}
