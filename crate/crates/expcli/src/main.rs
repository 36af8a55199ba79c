use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oscidisc::{emit_plot_data, run_dimension_sweep, run_experiment, ExperimentConfig, RunError};

#[derive(Parser)]
#[command(name = "oscidisc", version, about = "Model discovery for oscillator networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config and OSCIDISC_OUTPUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a dimension sweep.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write plot-ready CSV and SVG files for a finished run.
    Plot { dir: PathBuf },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run { config, out } => {
            let dir = run_experiment(&config, out.as_deref())?;
            println!("wrote {}", dir.display());
        }
        Command::Sweep {
            config,
            trials,
            jobs,
            out,
        } => {
            let (dir, result) = run_dimension_sweep(&config, trials, jobs, out.as_deref())?;
            println!(
                "wrote {} ({} cells, {} excluded trials, {:.1} s)",
                dir.display(),
                result.cells.len(),
                result.metadata.excluded_trials,
                result.metadata.wall_time_secs
            );
        }
        Command::Plot { dir } => {
            for f in emit_plot_data(&dir)? {
                println!("{}", f.display());
            }
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            println!("ok: {} experiment `{}`", cfg.experiment.as_str(), cfg.name);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
