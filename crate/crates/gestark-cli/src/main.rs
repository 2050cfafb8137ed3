use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use gestark::registry::StarkRegistry;
use gestark_cli::commands::{
    cmd_fit, cmd_gtensor, cmd_shift, cmd_simulate, cmd_sweep, cmd_tunability, render_tunability,
};
use gestark_cli::config::RunConfig;
use gestark_cli::render::OutputFormat;
use gestark_cli::{CliError, CliResult};

/// Stark-shift modeling, pulsed-ESR simulation, and parameter extraction
/// for donor electron spins in germanium.
#[derive(Parser)]
#[command(name = "gestark", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Stark parameter registry JSON (defaults to the bundled table).
    #[arg(long, global = true)]
    registry: Option<PathBuf>,

    /// Output rendering.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,

    /// Write output here instead of stdout (sweep/simulate require a path).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the noise seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Shift of each hyperfine line at the configured field.
    Shift,
    /// Shift vs. field (or vs. orientation angle) as CSV.
    Sweep,
    /// Generate a synthetic echo-phase dataset (CSV + metadata sidecar).
    Simulate,
    /// Extract Stark parameters from a dataset CSV.
    Fit {
        /// Dataset CSV path.
        dataset: PathBuf,
    },
    /// Maximum detuning vs. ensemble linewidth report.
    Tunability,
    /// Effective g-tensor and the g-factor along B.
    Gtensor,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let registry = match &cli.registry {
        Some(path) => StarkRegistry::load(path)?,
        None => StarkRegistry::bundled(),
    };
    let config = load_config(cli.config.as_deref())?;

    match &cli.command {
        Command::Shift => {
            let report = cmd_shift(&config, &registry)?;
            emit(cli.out.as_deref(), report.render(cli.format)?)
        }
        Command::Sweep => {
            let data = cmd_sweep(&config, &registry)?;
            emit(cli.out.as_deref(), data.to_csv())
        }
        Command::Simulate => {
            let out = cli.out.as_deref().ok_or_else(|| {
                CliError::Config("simulate needs --out PATH for the dataset CSV".into())
            })?;
            let simulation = cmd_simulate(&config, &registry, cli.seed)?;
            for warning in &simulation.warnings {
                eprintln!("warning: {warning}");
            }
            simulation.dataset.write(out)?;
            println!(
                "wrote {} rows to {} (+ metadata sidecar)",
                simulation.dataset.rows.len(),
                out.display()
            );
            Ok(())
        }
        Command::Fit { dataset } => {
            let report = cmd_fit(&config, &registry, dataset)?;
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            let format = match cli.format {
                // A fit renders as JSON unless a table is asked for.
                OutputFormat::Csv => OutputFormat::Json,
                other => other,
            };
            emit(cli.out.as_deref(), report.render(format)?)
        }
        Command::Tunability => {
            let report = cmd_tunability(&config, &registry)?;
            emit(cli.out.as_deref(), render_tunability(&report, cli.format)?)
        }
        Command::Gtensor => {
            let report = cmd_gtensor(&config, &registry)?;
            emit(cli.out.as_deref(), report.render(cli.format)?)
        }
    }
}

fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let path = path.ok_or_else(|| CliError::Config("missing --config PATH (a run JSON)".into()))?;
    RunConfig::from_file(path)
}

fn emit(out: Option<&Path>, text: String) -> CliResult<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
