use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use rotdev::cli::{self, RunConfig, Subcommand};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Rotset,
    Deviation,
    Stableset,
    Foliation,
    Verify,
    Render,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Rotset => Subcommand::Rotset,
            Command::Deviation => Subcommand::Deviation,
            Command::Stableset => Subcommand::Stableset,
            Command::Foliation => Subcommand::Foliation,
            Command::Verify => Subcommand::Verify,
            Command::Render => Subcommand::Render,
        }
    }
}

/// Rotation sets, rotational deviations, fibered stable sets and
/// pseudo-foliations of torus maps.
#[derive(Debug, Parser)]
#[command(name = "rotdev", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (INI).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Build the pseudo-foliation even without a bounded deviation verdict.
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let result = RunConfig::load(&args.config).and_then(|cfg| cli::run(args.command.into(), &cfg, args.out.as_deref(), args.force));
    match result {
        Ok(manifest) => {
            log::info!("{} finished, {} artifacts", manifest.subcommand, manifest.artifacts.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rotdev: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
