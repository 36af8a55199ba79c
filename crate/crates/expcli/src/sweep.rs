//! Dimension sweeps: many random networks per grid cell, each reduced to the
//! number of SVD modes needed for a set of accuracy thresholds.

use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use oscidisc_core::netsim::observables;
use oscidisc_core::reduction::dimension_from_singular_values;
use oscidisc_core::linalg::singular_values;
use oscidisc_core::seed::trial_seed;
use oscidisc_core::trajectory::{csv_err, csv_writer, fmt_f64};
use oscidisc_core::Error;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::config::{ExperimentConfig, NetworkConfig, ReductionConfig, SweepAxis, SweepConfig, SweepParam};
use crate::error::{RunError, RunResult, StageExt};
use crate::network::simulate_network;
use crate::output::{ensure_dir, write_json};

/// JSON has no NaN; failed cells store `null`.
fn nan_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    let v: Vec<Option<f64>> = Vec::deserialize(d)?;
    Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub index: usize,
    pub params: Vec<f64>,
    /// Trials that finished without blowing up.
    pub trials: usize,
    pub blowups: usize,
    pub failed: bool,
    /// Per-threshold mean dimension over the finished trials.
    #[serde(deserialize_with = "nan_vec")]
    pub mean: Vec<f64>,
    /// Per-threshold sample standard deviation.
    #[serde(deserialize_with = "nan_vec")]
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub master_seed: u64,
    pub trials_per_cell: usize,
    pub jobs: usize,
    pub force_same_seed: bool,
    pub excluded_trials: usize,
    pub state_dim_max: usize,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub axis_values: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
    pub grid: Vec<Vec<f64>>,
    pub cells: Vec<CellResult>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn cell(&self, params: &[f64]) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.params == params)
    }
}

/// Outcome of one simulated network.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    /// `None` when the simulation blew up.
    pub dims: Option<Vec<usize>>,
    pub state_dim: usize,
}

fn apply(net: &NetworkConfig, sweep: &SweepConfig, param: SweepParam, v: f64) -> NetworkConfig {
    let mut n = net.clone();
    match param {
        SweepParam::NKuramoto => {
            let total = sweep.n_total.unwrap_or(net.n());
            n.n_kuramoto = v as usize;
            n.n_fhn = total - n.n_kuramoto;
            n.n_rossler = 0;
            n.n_rayleigh = 0;
        }
        SweepParam::ConnectivityThreshold => n.p = 1.0 - v,
        SweepParam::CouplingKuramoto => n.coupling.kuramoto = v,
        SweepParam::CouplingFhn => n.coupling.fhn = v,
        SweepParam::OmegaMean => n.omega_mean = v,
    }
    n
}

fn axes(sweep: &SweepConfig) -> Vec<&SweepAxis> {
    std::iter::once(&sweep.axis1).chain(sweep.axis2.as_ref()).collect()
}

/// Cartesian product of the axis values, first axis slowest.
pub fn grid(sweep: &SweepConfig) -> Vec<Vec<f64>> {
    let a1 = &sweep.axis1.values;
    match &sweep.axis2 {
        None => a1.iter().map(|&v| vec![v]).collect(),
        Some(a2) => a1
            .iter()
            .flat_map(|&u| a2.values.iter().map(move |&v| vec![u, v]))
            .collect(),
    }
}

fn center_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    c
}

/// Simulates one network and estimates its dimension at each threshold.
pub fn run_trial(
    net: &NetworkConfig,
    red: &ReductionConfig,
    cell: usize,
    trial: usize,
    seed: u64,
) -> oscidisc_core::Result<TrialRecord> {
    let state_dim = net.n_kuramoto + 2 * net.n_fhn + 3 * net.n_rossler + 2 * net.n_rayleigh;
    let (spec, raw) = match simulate_network(net, seed) {
        Ok(v) => v,
        Err(Error::Blowup { .. }) => {
            return Ok(TrialRecord {
                cell,
                trial,
                seed,
                dims: None,
                state_dim,
            })
        }
        Err(e) => return Err(e),
    };
    let observed = observables(&spec, &raw)?;
    let x = if red.center {
        center_columns(observed.states())
    } else {
        observed.states().clone()
    };
    let s = singular_values(&x);
    let dims = dimension_from_singular_values(s.as_slice(), &red.thresholds, red.dim_convention)?;
    Ok(TrialRecord {
        cell,
        trial,
        seed,
        dims: Some(dims),
        state_dim,
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-cell aggregation of a trial log, in cell order.
pub fn aggregate(records: &[TrialRecord], grid: &[Vec<f64>], thresholds: &[f64]) -> Vec<CellResult> {
    grid.iter()
        .enumerate()
        .map(|(index, params)| {
            let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.cell == index).collect();
            let ok: Vec<&Vec<usize>> = mine.iter().filter_map(|r| r.dims.as_ref()).collect();
            let blowups = mine.len() - ok.len();
            let failed = ok.is_empty() || 2 * blowups > mine.len();
            let (mean, std) = (0..thresholds.len())
                .map(|k| {
                    if ok.is_empty() {
                        (f64::NAN, f64::NAN)
                    } else {
                        let v: Vec<f64> = ok.iter().map(|d| d[k] as f64).collect();
                        mean_std(&v)
                    }
                })
                .unzip();
            CellResult {
                index,
                params: params.clone(),
                trials: ok.len(),
                blowups,
                failed,
                mean,
                std,
            }
        })
        .collect()
}

/// Runs every (cell, trial) pair on a pool of `sweep.jobs` workers. Results
/// come back ordered by cell, then trial, whatever the completion order.
pub fn run_sweep(cfg: &ExperimentConfig, sweep: &SweepConfig) -> RunResult<(SweepResult, Vec<TrialRecord>)> {
    let started = Instant::now();
    let net = cfg.network.as_ref().expect("validated config has [network]");
    let red = cfg.reduction_or_default();
    let cells = grid(sweep);
    let ax = axes(sweep);
    let tasks: Vec<(usize, usize, NetworkConfig)> = cells
        .iter()
        .enumerate()
        .flat_map(|(ci, params)| {
            let mut n = net.clone();
            for (a, &v) in ax.iter().zip(params) {
                n = apply(&n, sweep, a.param, v);
            }
            (0..sweep.trials).map(move |t| (ci, t, n.clone()))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
        .stage("sweep")?;
    let records: Vec<TrialRecord> = pool
        .install(|| {
            tasks
                .par_iter()
                .map(|(ci, t, n)| {
                    let k = if sweep.force_same_seed { 0 } else { *t };
                    run_trial(n, &red, *ci, *t, trial_seed(cfg.seed, *ci, k))
                })
                .collect::<oscidisc_core::Result<Vec<_>>>()
        })
        .stage("sweep")?;
    let results = aggregate(&records, &cells, &red.thresholds);
    let result = SweepResult {
        axes: ax.iter().map(|a| a.param.as_str().to_string()).collect(),
        axis_values: ax.iter().map(|a| a.values.clone()).collect(),
        thresholds: red.thresholds.clone(),
        grid: cells,
        metadata: SweepMetadata {
            master_seed: cfg.seed,
            trials_per_cell: sweep.trials,
            jobs: sweep.jobs,
            force_same_seed: sweep.force_same_seed,
            excluded_trials: results.iter().map(|c| c.blowups).sum(),
            state_dim_max: records.iter().map(|r| r.state_dim).max().unwrap_or(0),
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
        cells: results,
    };
    Ok((result, records))
}

/// File name of the heat map for threshold `tau`.
pub fn heatmap_name(tau: f64) -> String {
    format!("heatmap_{}.csv", (tau * 100.0).round() as i64)
}

fn write_audit(path: &Path, result: &SweepResult, records: &[TrialRecord]) -> oscidisc_core::Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["cell".to_string(), "trial".into(), "seed".into()];
    header.extend(result.axes.iter().cloned());
    header.push("status".into());
    header.extend(result.thresholds.iter().map(|t| format!("dim_{}", (t * 100.0).round() as i64)));
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![r.cell.to_string(), r.trial.to_string(), r.seed.to_string()];
        row.extend(result.grid[r.cell].iter().map(|v| fmt_f64(*v)));
        match &r.dims {
            Some(d) => {
                row.push("ok".into());
                row.extend(d.iter().map(usize::to_string));
            }
            None => {
                row.push("blowup".into());
                row.extend(result.thresholds.iter().map(|_| String::new()));
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean dimension per threshold as a matrix: rows follow the first axis,
/// columns the second (a single `mean` column for one-axis sweeps).
pub fn write_heatmaps(dir: &Path, result: &SweepResult) -> oscidisc_core::Result<Vec<String>> {
    let rows = &result.axis_values[0];
    let cols: Option<&Vec<f64>> = result.axis_values.get(1);
    let mut names = Vec::new();
    for (k, &tau) in result.thresholds.iter().enumerate() {
        let name = heatmap_name(tau);
        let mut w = csv_writer(dir.join(&name))?;
        let mut header = vec![result.axes[0].clone()];
        match cols {
            Some(c) => header.extend(c.iter().map(|v| format!("{}={}", result.axes[1], fmt_f64(*v)))),
            None => header.push("mean".into()),
        }
        w.write_record(&header).map_err(csv_err)?;
        let width = cols.map_or(1, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            let mut row = vec![fmt_f64(*r)];
            for j in 0..width {
                row.push(fmt_f64(result.cells[i * width + j].mean[k]));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        names.push(name);
    }
    Ok(names)
}

/// Writes `sweep.json`, `dims_audit.csv` and the heat maps, then reports
/// the first failed cell, if any.
pub fn write_sweep(dir: &Path, result: &SweepResult, records: &[TrialRecord]) -> RunResult<()> {
    ensure_dir(dir)?;
    write_audit(&dir.join("dims_audit.csv"), result, records).stage("write")?;
    write_heatmaps(dir, result).stage("write")?;
    write_json(&dir.join("sweep.json"), result)?;
    match result.cells.iter().find(|c| c.failed) {
        Some(c) => Err(RunError::CellFailed {
            cell: c.index,
            blowups: c.blowups,
            trials: c.trials + c.blowups,
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(cell: usize, dims: Option<Vec<usize>>) -> TrialRecord {
        TrialRecord {
            cell,
            trial: 0,
            seed: 0,
            dims,
            state_dim: 10,
        }
    }

    #[test]
    fn aggregation_excludes_blowups() {
        let grid = vec![vec![0.0], vec![1.0]];
        let records = vec![
            rec(0, Some(vec![2])),
            rec(0, Some(vec![4])),
            rec(0, None),
            rec(1, None),
            rec(1, None),
            rec(1, Some(vec![3])),
        ];
        let cells = aggregate(&records, &grid, &[0.9]);
        assert_eq!(cells[0].trials, 2);
        assert_eq!(cells[0].blowups, 1);
        assert!(!cells[0].failed);
        assert_eq!(cells[0].mean, vec![3.0]);
        assert!((cells[0].std[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(cells[1].failed);
    }

    #[test]
    fn grid_is_row_major() {
        let sweep = SweepConfig {
            trials: 2,
            n_total: None,
            axis1: SweepAxis {
                param: SweepParam::NKuramoto,
                values: vec![0.0, 1.0],
            },
            axis2: Some(SweepAxis {
                param: SweepParam::ConnectivityThreshold,
                values: vec![0.5, 0.6, 0.7],
            }),
            force_same_seed: false,
            jobs: 1,
        };
        let g = grid(&sweep);
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], vec![0.0, 0.6]);
        assert_eq!(g[3], vec![1.0, 0.5]);
    }

    #[test]
    fn heatmap_names() {
        assert_eq!(heatmap_name(0.99), "heatmap_99.csv");
        assert_eq!(heatmap_name(0.9), "heatmap_90.csv");
    }
}
