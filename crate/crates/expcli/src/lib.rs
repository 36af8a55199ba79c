//! Configuration-driven experiment runner: canonical hybrid fits, network
//! reduction pipelines and dimension sweeps.

pub mod canonical;
pub mod config;
pub mod error;
pub mod metrics;
pub mod network;
pub mod output;
pub mod plot;
pub mod sweep;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{ConfigError, RunError, RunResult};
pub use plot::emit_plot_data;
pub use sweep::{SweepResult, TrialRecord};

/// Runs the pipeline named in the config and writes its artifacts to `out`
/// (or the configured directory). Returns the output directory.
pub fn run_experiment(config_path: &Path, out: Option<&Path>) -> RunResult<PathBuf> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    run_config(&cfg, out)
}

pub fn run_config(cfg: &ExperimentConfig, out: Option<&Path>) -> RunResult<PathBuf> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.resolve_output_dir());
    match cfg.experiment {
        ExperimentKind::CanonicalHybrid => {
            let run = canonical::run_canonical(cfg)?;
            canonical::write_canonical(&run, &dir)?;
        }
        ExperimentKind::NetworkReduceFit | ExperimentKind::MixedNetwork => {
            let run = network::run_network(cfg)?;
            network::write_network(&run, &dir)?;
        }
        ExperimentKind::DimensionSweep => {
            run_sweep_config(cfg, None, None, &dir)?;
        }
    }
    Ok(dir)
}

/// Runs a dimension sweep, optionally overriding the trial count and worker
/// count, and writes its artifacts to `dir`.
pub fn run_sweep_config(
    cfg: &ExperimentConfig,
    trials: Option<usize>,
    jobs: Option<usize>,
    dir: &Path,
) -> RunResult<SweepResult> {
    if cfg.experiment != ExperimentKind::DimensionSweep {
        return Err(ConfigError::new("experiment", "sweeps need experiment = \"dimension_sweep\"").into());
    }
    let sweep = cfg
        .sweep
        .clone()
        .expect("validated config has [sweep]")
        .with_overrides(trials, jobs);
    if sweep.trials < 2 {
        return Err(ConfigError::new("trials", format!("needs at least 2 trials, got {}", sweep.trials)).into());
    }
    if sweep.jobs == 0 {
        return Err(ConfigError::new("jobs", "must be at least 1").into());
    }
    let (result, records) = sweep::run_sweep(cfg, &sweep)?;
    sweep::write_sweep(dir, &result, &records)?;
    Ok(result)
}

/// `oscidisc sweep`: load, validate and run a sweep config.
pub fn run_dimension_sweep(
    config_path: &Path,
    trials: Option<usize>,
    jobs: Option<usize>,
    out: Option<&Path>,
) -> RunResult<(PathBuf, SweepResult)> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.resolve_output_dir());
    let result = run_sweep_config(&cfg, trials, jobs, &dir)?;
    Ok((dir, result))
}
