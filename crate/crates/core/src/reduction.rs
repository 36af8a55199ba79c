//! SVD coarse-graining of trajectories.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::trajectory::{self, Trajectory};

/// How a Frobenius-norm accuracy `τ` maps to a mode count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimConvention {
    /// Smallest `r` with `‖X − X_r‖_F / ‖X‖_F ≤ 1 − τ`.
    #[default]
    Error,
    /// Smallest `r` with `‖X_r‖_F / ‖X‖_F ≥ τ`.
    Energy,
}

/// A named group of state columns reduced on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub label: String,
    pub columns: Vec<usize>,
}

/// Per-block part of a block-wise basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBasis {
    pub block: Block,
    /// `|columns| × r` orthonormal modes in the block's own coordinates.
    pub modes: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub r: usize,
}

/// Leading singular directions of a state matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    /// `d × r` orthonormal columns; block-diagonal for block-wise bases.
    pub modes: DMatrix<f64>,
    /// Non-increasing singular values. Block-wise bases list the values of
    /// every block, merged and sorted.
    pub singular_values: DVector<f64>,
    pub r: usize,
    /// Column means subtracted before projection, when centring was used.
    pub mean: Option<DVector<f64>>,
    pub block_map: Option<Vec<BlockBasis>>,
}

impl ReducedBasis {
    /// Mode coordinates `(X − mean) · modes` of an `m × d` matrix.
    pub fn project(&self, states: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.mean {
            Some(mu) => {
                let mut centred = states.clone();
                for mut row in centred.row_iter_mut() {
                    row -= mu.transpose();
                }
                centred * &self.modes
            }
            None => states * &self.modes,
        }
    }

    /// Maps mode coordinates back to the full state space.
    pub fn lift(&self, coords: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = coords * self.modes.transpose();
        if let Some(mu) = &self.mean {
            for mut row in x.row_iter_mut() {
                row += mu.transpose();
            }
        }
        x
    }

    /// Writes the modes (`d` rows, `r` columns) and singular values as CSV.
    pub fn write_csv(
        &self,
        modes_path: impl AsRef<std::path::Path>,
        sv_path: impl AsRef<std::path::Path>,
    ) -> Result<()> {
        let mut w = trajectory::csv_writer(modes_path)?;
        let mut header = vec!["var".to_string()];
        header.extend(trajectory::mode_labels(self.r));
        w.write_record(&header).map_err(trajectory::csv_err)?;
        for i in 0..self.modes.nrows() {
            let mut row = vec![i.to_string()];
            row.extend(self.modes.row(i).iter().map(|v| trajectory::fmt_f64(*v)));
            w.write_record(&row).map_err(trajectory::csv_err)?;
        }
        w.flush()?;
        let mut w = trajectory::csv_writer(sv_path)?;
        w.write_record(["index", "sigma"]).map_err(trajectory::csv_err)?;
        for (k, s) in self.singular_values.iter().enumerate() {
            w.write_record([(k + 1).to_string(), trajectory::fmt_f64(*s)])
                .map_err(trajectory::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn column_mean(x: &DMatrix<f64>) -> DVector<f64> {
    let m = x.nrows().max(1) as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / m))
}

fn centred(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for mut row in c.row_iter_mut() {
        row -= mean.transpose();
    }
    c
}

fn project_trajectory(traj: &Trajectory, basis: &ReducedBasis) -> Result<Trajectory> {
    let coords = basis.project(traj.states());
    let derivs = traj.derivatives().map(|d| d * &basis.modes);
    Trajectory::new(
        traj.times().to_vec(),
        coords,
        derivs,
        trajectory::mode_labels(basis.r),
    )
}

/// Projects `traj` onto its leading `r` right singular vectors.
pub fn reduce(traj: &Trajectory, r: usize, center: bool) -> Result<(ReducedBasis, Trajectory)> {
    let (m, d) = (traj.len(), traj.dim());
    let k = m.min(d);
    if r == 0 || r > k {
        return Err(Error::invalid(format!("rank r = {r} must lie in 1..={k}")));
    }
    let mean = center.then(|| column_mean(traj.states()));
    let x = match &mean {
        Some(mu) => centred(traj.states(), mu),
        None => traj.states().clone(),
    };
    let (s, v) = linalg::right_singular(&x);
    let basis = ReducedBasis {
        modes: v.columns(0, r).into_owned(),
        singular_values: s,
        r,
        mean,
        block_map: None,
    };
    let projected = project_trajectory(traj, &basis)?;
    Ok((basis, projected))
}

/// Reduces each block separately and concatenates the mode coordinates
/// block by block.
pub fn reduce_blockwise(
    traj: &Trajectory,
    blocks: &[Block],
    r_per_block: &[usize],
) -> Result<(ReducedBasis, Trajectory)> {
    let d = traj.dim();
    if blocks.is_empty() || blocks.len() != r_per_block.len() {
        return Err(Error::invalid("need one rank per block and at least one block"));
    }
    let mut owner = vec![None; d];
    for (b, block) in blocks.iter().enumerate() {
        if block.columns.is_empty() {
            return Err(Error::invalid(format!("block `{}` is empty", block.label)));
        }
        for &c in &block.columns {
            if c >= d {
                return Err(Error::invalid(format!(
                    "block `{}` refers to column {c} of a {d}-column trajectory",
                    block.label
                )));
            }
            if let Some(prev) = owner[c].replace(b) {
                return Err(Error::invalid(format!(
                    "column {c} appears in blocks `{}` and `{}`",
                    blocks[prev].label, block.label
                )));
            }
        }
    }
    if let Some(c) = owner.iter().position(Option::is_none) {
        return Err(Error::invalid(format!("column {c} is not covered by any block")));
    }

    let total_r: usize = r_per_block.iter().sum();
    let mut modes = DMatrix::zeros(d, total_r);
    let mut parts = Vec::with_capacity(blocks.len());
    let mut all_sv = Vec::new();
    let mut col0 = 0;
    for (block, &r) in blocks.iter().zip(r_per_block) {
        let sub = traj.select_columns(&block.columns);
        let (basis, _) = reduce(&sub, r, false)
            .map_err(|e| Error::invalid(format!("block `{}`: {e}", block.label)))?;
        for (local, &global) in block.columns.iter().enumerate() {
            for k in 0..r {
                modes[(global, col0 + k)] = basis.modes[(local, k)];
            }
        }
        all_sv.extend(basis.singular_values.iter().copied());
        parts.push(BlockBasis {
            block: block.clone(),
            modes: basis.modes,
            singular_values: basis.singular_values,
            r,
        });
        col0 += r;
    }
    all_sv.sort_by(|a, b| b.total_cmp(a));
    let basis = ReducedBasis {
        modes,
        singular_values: DVector::from_vec(all_sv),
        r: total_r,
        mean: None,
        block_map: Some(parts),
    };
    let projected = project_trajectory(traj, &basis)?;
    Ok((basis, projected))
}

/// Relative reconstruction error `‖X − X_r‖_F / ‖X‖_F` for each `r = 0..=k`.
pub fn relative_errors(singular_values: &[f64]) -> Vec<f64> {
    let k = singular_values.len();
    let mut tails = vec![0.0; k + 1];
    for r in (0..k).rev() {
        tails[r] = tails[r + 1] + singular_values[r] * singular_values[r];
    }
    let total = tails[0];
    tails
        .into_iter()
        .map(|t| if total > 0.0 { (t / total).sqrt() } else { 0.0 })
        .collect()
}

/// Mode counts needed to reach each accuracy threshold.
pub fn dimension_from_singular_values(
    singular_values: &[f64],
    thresholds: &[f64],
    convention: DimConvention,
) -> Result<Vec<usize>> {
    if singular_values.is_empty() {
        return Err(Error::invalid("no singular values"));
    }
    for &tau in thresholds {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::invalid(format!("threshold {tau} outside (0, 1]")));
        }
    }
    let k = singular_values.len();
    let errors = relative_errors(singular_values);
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let mut retained = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    retained.push(0.0);
    for s in singular_values {
        acc += s * s;
        retained.push(if total > 0.0 { (acc / total).sqrt() } else { 1.0 });
    }
    const SLACK: f64 = 1e-12;
    Ok(thresholds
        .iter()
        .map(|&tau| {
            (1..=k)
                .find(|&r| match convention {
                    DimConvention::Error => errors[r] <= (1.0 - tau) + SLACK,
                    DimConvention::Energy => retained[r] >= tau - SLACK,
                })
                .unwrap_or(k)
        })
        .collect())
}

/// Mode counts needed to reconstruct `traj` to each accuracy threshold.
pub fn estimate_dimension(
    traj: &Trajectory,
    thresholds: &[f64],
    convention: DimConvention,
) -> Result<Vec<usize>> {
    if traj.is_empty() || traj.dim() == 0 {
        return Err(Error::invalid("cannot estimate the dimension of an empty trajectory"));
    }
    let s = linalg::singular_values(traj.states());
    dimension_from_singular_values(s.as_slice(), thresholds, convention)
}
