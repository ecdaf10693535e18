use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use preset_cli::examples::{example, EXAMPLES};
use preset_cli::{execute, parse_config, thread_pool, CliError, Format, RunConfig};
use preset_core::experiments::ExperimentKind;

#[derive(Parser)]
#[command(name = "preset", version, about = "Parametric flux-modulation reset simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding output.directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for scans; defaults to one per core.
    #[arg(long, env = "PRESET_THREADS")]
    threads: Option<usize>,
    /// Data file format, overriding output.format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment the configuration names.
    Run(RunArgs),
    /// Amplitude x frequency scan of one tone.
    SingleToneScan(RunArgs),
    /// Frequency x frequency scan of two tones.
    TwoToneScan(RunArgs),
    /// Populations over time for one fixed drive.
    TimeTrace(RunArgs),
    /// Three-level populations over time for a two-tone drive.
    TwoToneTrace(RunArgs),
    /// Residual excitation over repeated preparation and reset cycles.
    RepeatedReset(RunArgs),
    /// Free relaxation to thermal equilibrium with the modulation off.
    Rethermalization(RunArgs),
    /// Parse and check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Print the resolved configuration with every default filled in.
        #[arg(long)]
        resolved: bool,
    },
    /// Print a bundled configuration, or list them when no name is given.
    Example { name: Option<String> },
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

fn run(args: RunArgs, expected: Option<ExperimentKind>) -> Result<ExitCode, CliError> {
    let mut config = load(&args.config)?;
    if let Some(kind) = expected {
        if config.experiment.kind != kind {
            return Err(CliError::invalid(
                "experiment.kind",
                format!(
                    "is {}, but the {} command was used",
                    config.experiment.kind.name(),
                    kind.name()
                ),
            ));
        }
    }
    if let Some(out) = args.out {
        config.output.directory = out;
    }
    if let Some(format) = args.format {
        config.output.format = format;
    }
    let pool = thread_pool(args.threads)?;
    let report = execute(&config, &pool)?;
    println!("{}", report.data.display());
    println!("{}", report.metadata.display());
    println!("{}", report.summary.display());
    if report.failed_cells > 0 {
        eprintln!(
            "error: {} of {} cells failed to integrate",
            report.failed_cells, report.cells
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(command: Command) -> Result<ExitCode, CliError> {
    use ExperimentKind::*;
    match command {
        Command::Run(a) => run(a, None),
        Command::SingleToneScan(a) => run(a, Some(SingleToneScan)),
        Command::TwoToneScan(a) => run(a, Some(TwoToneScan)),
        Command::TimeTrace(a) => run(a, Some(TimeTrace)),
        Command::TwoToneTrace(a) => run(a, Some(TwoToneTrace)),
        Command::RepeatedReset(a) => run(a, Some(RepeatedReset)),
        Command::Rethermalization(a) => run(a, Some(Rethermalization)),
        Command::Validate { config, resolved } => {
            let config = load(&config)?;
            config.job()?;
            if resolved {
                print!("{}", config.to_toml());
            } else {
                println!("ok: {}", config.experiment.kind.name());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Example { name: None } => {
            for (name, _) in EXAMPLES {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Example { name: Some(name) } => match example(&name) {
            Some(text) => {
                print!("{text}");
                Ok(ExitCode::SUCCESS)
            }
            None => Err(CliError::invalid(
                "example",
                format!("no bundled configuration named \"{name}\""),
            )),
        },
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
