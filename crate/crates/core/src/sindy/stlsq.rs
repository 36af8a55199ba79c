use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Coefficients from a (possibly trimmed) sequentially thresholded fit.
#[derive(Debug, Clone, PartialEq)]
pub struct StlsqFit {
    /// `p × d` coefficient matrix; rows are library terms.
    pub xi: DMatrix<f64>,
    pub lambda: f64,
    /// Largest number of threshold sweeps used by any target column.
    pub iterations: usize,
    /// Some active-set solve was rank deficient and fell back to the
    /// minimum-norm solution.
    pub ill_conditioned: bool,
    /// Worst condition estimate of any active-set normal matrix.
    pub condition: f64,
}

impl StlsqFit {
    pub fn active_count(&self) -> usize {
        self.xi.iter().filter(|v| **v != 0.0).count()
    }
}

/// Per-sample trimming weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimResult {
    /// Weight of each sample; `1` for inliers, `0` for trimmed samples.
    pub v: Vec<f64>,
    /// Inlier budget `Σv`.
    pub h: usize,
    /// `true` where `v < 0.5`.
    pub trim_mask: Vec<bool>,
    /// `½ Σ v_i ‖r_i‖²` after each weight update.
    pub objective: Vec<f64>,
    pub outer_iterations: usize,
}

impl TrimResult {
    /// All samples kept.
    pub fn all_inliers(m: usize) -> Self {
        Self {
            v: vec![1.0; m],
            h: m,
            trim_mask: vec![false; m],
            objective: Vec::new(),
            outer_iterations: 0,
        }
    }

    /// Weights from an explicit trimmed mask.
    pub fn from_mask(trim_mask: Vec<bool>) -> Self {
        let v: Vec<f64> = trim_mask.iter().map(|&t| if t { 0.0 } else { 1.0 }).collect();
        let h = trim_mask.iter().filter(|t| !**t).count();
        Self {
            v,
            h,
            trim_mask,
            objective: Vec::new(),
            outer_iterations: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn trimmed_indices(&self) -> Vec<usize> {
        (0..self.trim_mask.len()).filter(|&i| self.trim_mask[i]).collect()
    }
}

fn check_shapes(theta: &DMatrix<f64>, xdot: &DMatrix<f64>, lambda: f64) -> Result<()> {
    if theta.nrows() != xdot.nrows() {
        return Err(Error::Dimension {
            context: "library rows vs derivative rows",
            expected: theta.nrows(),
            got: xdot.nrows(),
        });
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    if let Some(i) = (0..theta.nrows())
        .find(|&i| theta.row(i).iter().chain(xdot.row(i).iter()).any(|v| !v.is_finite()))
    {
        return Err(Error::NonFinite { row: i });
    }
    Ok(())
}

/// STLSQ on precomputed normal equations `G = ΘᵀΘ`, `B = ΘᵀẊ`.
///
/// Each target column keeps its own active set: solve on the active
/// columns, drop coefficients with `|ξ| < λ`, repeat until the set is stable.
pub fn stlsq_normal(g: &DMatrix<f64>, b: &DMatrix<f64>, lambda: f64, max_iter: usize) -> StlsqFit {
    let (p, d) = (g.nrows(), b.ncols());
    let mut xi = DMatrix::zeros(p, d);
    let mut iterations = 0;
    let mut ill = false;
    let mut condition: f64 = 1.0;
    for k in 0..d {
        let mut active: Vec<usize> = (0..p).collect();
        let mut coef = vec![0.0; p];
        let mut sweeps = 0;
        while !active.is_empty() && sweeps < max_iter.max(1) {
            sweeps += 1;
            let ga = g.select_rows(&active).select_columns(&active);
            let ba = DVector::from_iterator(active.len(), active.iter().map(|&i| b[(i, k)]));
            let sol = linalg::solve_gram(&ga, &ba);
            ill |= sol.ill_conditioned;
            condition = condition.max(sol.condition);
            coef.iter_mut().for_each(|c| *c = 0.0);
            for (a, &i) in active.iter().enumerate() {
                coef[i] = sol.x[a];
            }
            let kept: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| coef[i].abs() >= lambda)
                .collect();
            if kept.len() == active.len() {
                break;
            }
            active = kept;
            if active.is_empty() {
                coef.iter_mut().for_each(|c| *c = 0.0);
            }
        }
        // Iteration cap reached mid-sweep: enforce the coefficient floor.
        for c in coef.iter_mut() {
            if c.abs() < lambda {
                *c = 0.0;
            }
        }
        for i in 0..p {
            xi[(i, k)] = coef[i];
        }
        iterations = iterations.max(sweeps);
    }
    StlsqFit {
        xi,
        lambda,
        iterations,
        ill_conditioned: ill,
        condition,
    }
}

/// Sequentially thresholded least squares for `Ẋ ≈ ΘΞ`.
pub fn stlsq(theta: &DMatrix<f64>, xdot: &DMatrix<f64>, lambda: f64, max_iter: usize) -> Result<StlsqFit> {
    check_shapes(theta, xdot, lambda)?;
    Ok(stlsq_normal(&theta.tr_mul(theta), &theta.tr_mul(xdot), lambda, max_iter))
}

fn gram_on_rows(theta: &DMatrix<f64>, xdot: &DMatrix<f64>, rows: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let ts = theta.select_rows(rows);
    let xs = xdot.select_rows(rows);
    (ts.tr_mul(&ts), ts.tr_mul(&xs))
}

/// Squared residual norm of each row.
pub fn row_residuals(theta: &DMatrix<f64>, xdot: &DMatrix<f64>, xi: &DMatrix<f64>) -> Vec<f64> {
    let r = theta * xi - xdot;
    r.row_iter().map(|row| row.norm_squared()).collect()
}

/// Indices of the `h` smallest residuals, ties broken by lower index,
/// returned in increasing index order.
pub fn best_rows(residuals: &[f64], h: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..residuals.len()).collect();
    order.sort_by(|&a, &b| residuals[a].total_cmp(&residuals[b]).then(a.cmp(&b)));
    let mut keep = order[..h].to_vec();
    keep.sort_unstable();
    keep
}

/// Inlier budget `h = round(m (1 − trim_fraction))`.
pub fn inlier_budget(m: usize, trim_fraction: f64) -> usize {
    (m as f64 * (1.0 - trim_fraction)).round() as usize
}

/// Trimmed STLSQ: alternates a thresholded fit on the current inliers with
/// keeping the `h` rows of smallest squared residual.
///
/// Stops when the inlier set repeats or after `max_outer_iter` weight
/// updates.
pub fn stlsq_trimmed(
    theta: &DMatrix<f64>,
    xdot: &DMatrix<f64>,
    lambda: f64,
    trim_fraction: f64,
    max_iter: usize,
    max_outer_iter: usize,
) -> Result<(StlsqFit, TrimResult)> {
    check_shapes(theta, xdot, lambda)?;
    if !(0.0..1.0).contains(&trim_fraction) {
        return Err(Error::invalid(format!("trim fraction {trim_fraction} outside [0, 1)")));
    }
    let (m, p) = (theta.nrows(), theta.ncols());
    let h = inlier_budget(m, trim_fraction);
    if h <= p {
        return Err(Error::TrimBudget { h, p });
    }
    if h >= m {
        let fit = stlsq(theta, xdot, lambda, max_iter)?;
        return Ok((fit, TrimResult::all_inliers(m)));
    }

    let mut fit = stlsq_normal(&theta.tr_mul(theta), &theta.tr_mul(xdot), lambda, max_iter);
    let mut inliers: Vec<usize> = Vec::new();
    let mut objective = Vec::new();
    let mut outer = 0;
    while outer < max_outer_iter.max(1) {
        outer += 1;
        let res = row_residuals(theta, xdot, &fit.xi);
        let next = best_rows(&res, h);
        objective.push(0.5 * next.iter().map(|&i| res[i]).sum::<f64>());
        if next == inliers {
            break;
        }
        inliers = next;
        let (g, b) = gram_on_rows(theta, xdot, &inliers);
        fit = stlsq_normal(&g, &b, lambda, max_iter);
    }
    let mut v = vec![0.0; m];
    for &i in &inliers {
        v[i] = 1.0;
    }
    let trim_mask = v.iter().map(|&w| w < 0.5).collect();
    Ok((
        fit,
        TrimResult {
            v,
            h,
            trim_mask,
            objective,
            outer_iterations: outer,
        },
    ))
}
