//! Time-stamped state matrices and their on-disk formats.

use std::io::{BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Magic bytes opening the binary trajectory format.
pub const BINARY_MAGIC: [u8; 8] = *b"OSCTRJ01";

/// Samples of a state vector on a strictly increasing time grid.
///
/// `states` is `m × d` (one row per sample). When present, `derivatives` has
/// the same shape and holds the time derivative of each state row.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: DMatrix<f64>,
    derivatives: Option<DMatrix<f64>>,
    labels: Vec<String>,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        states: DMatrix<f64>,
        derivatives: Option<DMatrix<f64>>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if states.nrows() != times.len() {
            return Err(Error::Dimension {
                context: "trajectory rows vs times",
                expected: times.len(),
                got: states.nrows(),
            });
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(format!(
                "times must be strictly increasing (violated at index {})",
                i + 1
            )));
        }
        if let Some(d) = &derivatives {
            if d.shape() != states.shape() {
                return Err(Error::Dimension {
                    context: "derivative matrix columns",
                    expected: states.ncols(),
                    got: d.ncols(),
                });
            }
        }
        if labels.len() != states.ncols() {
            return Err(Error::Dimension {
                context: "trajectory labels",
                expected: states.ncols(),
                got: labels.len(),
            });
        }
        Ok(Self {
            times,
            states,
            derivatives,
            labels,
        })
    }

    /// Builds a trajectory with default `var_k` labels.
    pub fn with_default_labels(
        times: Vec<f64>,
        states: DMatrix<f64>,
        derivatives: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let labels = default_labels(states.ncols());
        Self::new(times, states, derivatives, labels)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &DMatrix<f64> {
        &self.states
    }

    pub fn derivatives(&self) -> Option<&DMatrix<f64>> {
        self.derivatives.as_ref()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of state variables.
    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn state(&self, i: usize) -> Vec<f64> {
        self.states.row(i).iter().copied().collect()
    }

    pub fn set_derivatives(&mut self, derivatives: DMatrix<f64>) -> Result<()> {
        if derivatives.shape() != self.states.shape() {
            return Err(Error::Dimension {
                context: "derivative matrix rows",
                expected: self.states.nrows(),
                got: derivatives.nrows(),
            });
        }
        self.derivatives = Some(derivatives);
        Ok(())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim() {
            return Err(Error::Dimension {
                context: "trajectory labels",
                expected: self.dim(),
                got: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    /// Rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Trajectory {
        let end = end.min(self.len());
        let start = start.min(end);
        let n = end - start;
        Trajectory {
            times: self.times[start..end].to_vec(),
            states: self.states.rows(start, n).into_owned(),
            derivatives: self.derivatives.as_ref().map(|d| d.rows(start, n).into_owned()),
            labels: self.labels.clone(),
        }
    }

    /// Samples with `t >= t_start`.
    pub fn after(&self, t_start: f64) -> Trajectory {
        let start = self.times.partition_point(|&t| t < t_start);
        self.slice(start, self.len())
    }

    /// Every `stride`-th sample, starting from the first.
    pub fn subsample(&self, stride: usize) -> Trajectory {
        let stride = stride.max(1);
        let idx: Vec<usize> = (0..self.len()).step_by(stride).collect();
        self.select_rows(&idx)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Trajectory {
        Trajectory {
            times: rows.iter().map(|&i| self.times[i]).collect(),
            states: self.states.select_rows(rows),
            derivatives: self.derivatives.as_ref().map(|d| d.select_rows(rows)),
            labels: self.labels.clone(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self.states.select_columns(cols),
            derivatives: self.derivatives.as_ref().map(|d| d.select_columns(cols)),
            labels: cols.iter().map(|&c| self.labels[c].clone()).collect(),
        }
    }

    /// Step size if the grid is uniform to within `rel_tol`.
    pub fn uniform_step(&self, rel_tol: f64) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::invalid("need at least two samples for a time step"));
        }
        let h = self.times[1] - self.times[0];
        for (i, w) in self.times.windows(2).enumerate() {
            if ((w[1] - w[0]) - h).abs() > rel_tol * h.abs() {
                return Err(Error::NonUniformGrid { index: i });
            }
        }
        Ok(h)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_matrix_csv(path, &self.times, &self.states, &self.labels)
    }

    /// Companion file holding the derivative matrix with the same header.
    pub fn write_derivative_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let d = self
            .derivatives
            .as_ref()
            .ok_or_else(|| Error::invalid("trajectory carries no derivatives"))?;
        write_matrix_csv(path, &self.times, d, &self.labels)
    }

    /// Reads a trajectory CSV (header `t,<labels...>`).
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Trajectory> {
        let (labels, times, states) = read_matrix_csv(path)?;
        Trajectory::new(times, states, None, labels)
    }

    /// Binary layout: 8-byte magic, `m: u64`, `d: u64` (all little-endian),
    /// then an `m × d` row-major `f64` matrix whose first column is time.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        let m = self.len() as u64;
        let d = (self.dim() + 1) as u64;
        w.write_all(&BINARY_MAGIC)?;
        w.write_all(&m.to_le_bytes())?;
        w.write_all(&d.to_le_bytes())?;
        for i in 0..self.len() {
            w.write_all(&self.times[i].to_le_bytes())?;
            for j in 0..self.dim() {
                w.write_all(&self.states[(i, j)].to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Trajectory> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != BINARY_MAGIC {
            return Err(Error::Format("bad magic in binary trajectory".into()));
        }
        let m = read_u64(&mut r)? as usize;
        let d = read_u64(&mut r)? as usize;
        if d == 0 {
            return Err(Error::Format("binary trajectory has zero columns".into()));
        }
        let mut times = Vec::with_capacity(m);
        let mut states = DMatrix::zeros(m, d - 1);
        let mut buf = [0u8; 8];
        for i in 0..m {
            r.read_exact(&mut buf)?;
            times.push(f64::from_le_bytes(buf));
            for j in 0..d - 1 {
                r.read_exact(&mut buf)?;
                states[(i, j)] = f64::from_le_bytes(buf);
            }
        }
        Trajectory::with_default_labels(times, states, None)
    }
}

pub fn default_labels(d: usize) -> Vec<String> {
    (0..d).map(|k| format!("var_{k}")).collect()
}

/// Labels `U_1 … U_r` for mode coordinates.
pub fn mode_labels(r: usize) -> Vec<String> {
    (1..=r).map(|k| format!("U_{k}")).collect()
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_matrix_csv(
    path: impl AsRef<Path>,
    times: &[f64],
    m: &DMatrix<f64>,
    labels: &[String],
) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    let mut row = Vec::with_capacity(m.ncols() + 1);
    for (i, t) in times.iter().enumerate() {
        row.clear();
        row.push(fmt_f64(*t));
        row.extend((0..m.ncols()).map(|j| fmt_f64(m[(i, j)])));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// RFC-4180 writer with CRLF terminators.
pub fn csv_writer(path: impl AsRef<Path>) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(csv_err)
}

pub fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Reads a numeric CSV whose first column is time.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<f64>, DMatrix<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let cols: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if cols.first().map(String::as_str) != Some("t") {
        return Err(Error::Format("CSV header must start with `t`".into()));
    }
    let d = cols.len() - 1;
    let mut times = Vec::new();
    let mut data = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("data row {}: {e}", k + 1)))
        };
        times.push(parse(&rec[0])?);
        for f in rec.iter().skip(1) {
            data.push(parse(f)?);
        }
    }
    let states = DMatrix::from_row_slice(times.len(), d, &data);
    Ok((cols[1..].to_vec(), times, states))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
