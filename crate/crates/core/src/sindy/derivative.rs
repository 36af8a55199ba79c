use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Finite-difference scheme for trajectories without measured derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DerivativeMethod {
    CentralDifference,
    /// Centred moving average of odd `window` width before differencing.
    Smoothed { window: usize },
}

/// Relative jitter tolerated in the time grid.
const GRID_TOL: f64 = 1e-6;

/// Second-order differences: centred in the interior, one-sided three-point
/// stencils at both ends.
pub fn estimate_derivatives(traj: &Trajectory, method: DerivativeMethod) -> Result<DMatrix<f64>> {
    if traj.len() < 3 {
        return Err(Error::invalid("need at least three samples to differentiate"));
    }
    let h = traj.uniform_step(GRID_TOL)?;
    let x = match method {
        DerivativeMethod::CentralDifference => traj.states().clone(),
        DerivativeMethod::Smoothed { window } => {
            if window == 0 || window % 2 == 0 {
                return Err(Error::invalid(format!("smoothing window must be odd, got {window}")));
            }
            moving_average(traj.states(), window)
        }
    };
    Ok(differentiate(&x, h))
}

fn differentiate(x: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let m = x.nrows();
    let mut d = DMatrix::zeros(m, x.ncols());
    for c in 0..x.ncols() {
        let col = x.column(c);
        d[(0, c)] = (-3.0 * col[0] + 4.0 * col[1] - col[2]) / (2.0 * h);
        for i in 1..m - 1 {
            d[(i, c)] = (col[i + 1] - col[i - 1]) / (2.0 * h);
        }
        d[(m - 1, c)] = (3.0 * col[m - 1] - 4.0 * col[m - 2] + col[m - 3]) / (2.0 * h);
    }
    d
}

/// Centred moving average; the window shrinks symmetrically near the ends.
fn moving_average(x: &DMatrix<f64>, window: usize) -> DMatrix<f64> {
    let m = x.nrows();
    let half = window / 2;
    DMatrix::from_fn(m, x.ncols(), |i, c| {
        let reach = half.min(i).min(m - 1 - i);
        let lo = i - reach;
        let hi = i + reach;
        x.column(c).rows(lo, hi - lo + 1).mean()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(f: impl Fn(f64) -> f64, dt: f64, n: usize) -> Trajectory {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let x = DMatrix::from_iterator(n, 1, t.iter().map(|&s| f(s)));
        Trajectory::with_default_labels(t, x, None).unwrap()
    }

    #[test]
    fn exact_on_quadratics() {
        let tr = sampled(|t| t * t, 0.01, 200);
        let d = estimate_derivatives(&tr, DerivativeMethod::CentralDifference).unwrap();
        for i in 0..tr.len() {
            assert!((d[(i, 0)] - 2.0 * tr.times()[i]).abs() < 1e-10, "row {i}");
        }
    }

    #[test]
    fn sine_error_is_second_order() {
        let tr = sampled(f64::sin, 0.01, 1000);
        let d = estimate_derivatives(&tr, DerivativeMethod::CentralDifference).unwrap();
        let worst = (1..tr.len() - 1)
            .map(|i| (d[(i, 0)] - tr.times()[i].cos()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 2e-5, "worst {worst}");
    }

    #[test]
    fn constant_has_zero_derivative() {
        let tr = sampled(|_| 4.2, 0.1, 10);
        for method in [DerivativeMethod::CentralDifference, DerivativeMethod::Smoothed { window: 5 }] {
            let d = estimate_derivatives(&tr, method).unwrap();
            assert!(d.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn smoothing_preserves_lines_and_rejects_even_windows() {
        let tr = sampled(|t| 3.0 * t - 1.0, 0.1, 30);
        let d = estimate_derivatives(&tr, DerivativeMethod::Smoothed { window: 7 }).unwrap();
        assert!(d.iter().all(|v| (v - 3.0).abs() < 1e-9));
        assert!(estimate_derivatives(&tr, DerivativeMethod::Smoothed { window: 4 }).is_err());
    }

    #[test]
    fn non_uniform_grid_rejected() {
        let x = DMatrix::zeros(4, 1);
        let tr = Trajectory::with_default_labels(vec![0.0, 1.0, 2.0, 3.5], x, None).unwrap();
        assert!(matches!(
            estimate_derivatives(&tr, DerivativeMethod::CentralDifference),
            Err(Error::NonUniformGrid { .. })
        ));
    }
}
