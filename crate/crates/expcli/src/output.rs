//! Artifact writers shared by the pipelines.

use std::path::Path;

use oscidisc_core::trajectory::{csv_err, csv_writer, fmt_f64};
use oscidisc_core::Trajectory;
use serde::Serialize;

use crate::error::{io_err, RunResult, StageExt};

pub fn ensure_dir(dir: &Path) -> RunResult<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> RunResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(oscidisc_core::Error::from)
        .stage("write")?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

/// Trajectory CSV with an extra integer `label` column.
pub fn write_labeled_csv(path: &Path, traj: &Trajectory, labels: &[usize]) -> RunResult<()> {
    let inner = || -> oscidisc_core::Result<()> {
        let mut w = csv_writer(path)?;
        let mut header = vec!["t".to_string()];
        header.extend(traj.labels().iter().cloned());
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
        for (i, label) in labels.iter().enumerate().take(traj.len()) {
            let mut row = vec![fmt_f64(traj.times()[i])];
            row.extend((0..traj.dim()).map(|j| fmt_f64(traj.states()[(i, j)])));
            row.push(label.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    };
    inner().stage("write")
}

/// `t,<column>` with integer values.
pub fn write_int_column(path: &Path, times: &[f64], column: &str, values: &[usize]) -> RunResult<()> {
    let inner = || -> oscidisc_core::Result<()> {
        let mut w = csv_writer(path)?;
        w.write_record(["t", column]).map_err(csv_err)?;
        for (t, v) in times.iter().zip(values) {
            w.write_record([fmt_f64(*t), v.to_string()]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    };
    inner().stage("write")
}

pub fn write_trim_mask(path: &Path, times: &[f64], mask: &[bool]) -> RunResult<()> {
    let bits: Vec<usize> = mask.iter().map(|&b| b as usize).collect();
    write_int_column(path, times, "trimmed", &bits)
}
