//! Trajectory metrics: periods, set distances, synchrony and fit quality.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Times at which `signal` crosses `level` upwards, linearly interpolated.
pub fn upward_crossings(times: &[f64], signal: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..signal.len().min(times.len()) {
        let (a, b) = (signal[i - 1] - level, signal[i] - level);
        if a < 0.0 && b >= 0.0 {
            let frac = a / (a - b);
            out.push(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
    }
    out
}

/// Mean spacing of upward crossings of the signal's mean.
pub fn period_by_zero_crossing(times: &[f64], signal: &[f64]) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::invalid("empty signal"));
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    period_at_level(times, signal, mean)
}

/// Mean spacing of upward crossings of `level`.
pub fn period_at_level(times: &[f64], signal: &[f64], level: f64) -> Result<f64> {
    let c = upward_crossings(times, signal, level);
    if c.len() < 2 {
        return Err(Error::invalid(format!(
            "need two upward crossings to measure a period, found {}",
            c.len()
        )));
    }
    Ok((c[c.len() - 1] - c[0]) / (c.len() - 1) as f64)
}

fn sq_dist(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    (0..a.ncols()).map(|k| (a[(i, k)] - b[(j, k)]).powi(2)).sum()
}

/// Largest distance from a row of `a` to its nearest row of `b`.
pub fn directed_hausdorff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        let mut best = f64::INFINITY;
        for j in 0..b.nrows() {
            let d = sq_dist(a, i, b, j);
            if d < best {
                best = d;
                if best <= worst {
                    break;
                }
            }
        }
        worst = worst.max(best);
    }
    worst.sqrt()
}

/// Symmetric Hausdorff distance between two point sets (rows).
pub fn hausdorff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.ncols() != b.ncols() {
        return Err(Error::Dimension {
            context: "Hausdorff point dimension",
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::invalid("Hausdorff distance of an empty set"));
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

/// Largest pairwise distance between rows.
pub fn diameter(points: &DMatrix<f64>) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..points.nrows() {
        for j in (i + 1)..points.nrows() {
            best = best.max(sq_dist(points, i, points, j));
        }
    }
    best.sqrt()
}

/// Every `stride`-th row.
pub fn thin_rows(points: &DMatrix<f64>, stride: usize) -> DMatrix<f64> {
    let idx: Vec<usize> = (0..points.nrows()).step_by(stride.max(1)).collect();
    points.select_rows(&idx)
}

/// Kuramoto order parameter `|⟨e^{iθ}⟩|`.
pub fn order_parameter(phases: &[f64]) -> f64 {
    if phases.is_empty() {
        return 0.0;
    }
    let (s, c) = phases
        .iter()
        .fold((0.0, 0.0), |(s, c), th| (s + th.sin(), c + th.cos()));
    (s * s + c * c).sqrt() / phases.len() as f64
}

/// Coefficient of determination `1 − SS_res / SS_tot` of each column.
pub fn r_squared(actual: &DMatrix<f64>, predicted: &DMatrix<f64>) -> Result<Vec<f64>> {
    if actual.shape() != predicted.shape() {
        return Err(Error::Dimension {
            context: "R² prediction shape",
            expected: actual.ncols(),
            got: predicted.ncols(),
        });
    }
    Ok((0..actual.ncols())
        .map(|k| {
            let a = actual.column(k);
            let mean = a.mean();
            let ss_tot: f64 = a.iter().map(|v| (v - mean).powi(2)).sum();
            let ss_res: f64 = a
                .iter()
                .zip(predicted.column(k).iter())
                .map(|(x, y)| (x - y).powi(2))
                .sum();
            if ss_tot > 0.0 {
                1.0 - ss_res / ss_tot
            } else if ss_res == 0.0 {
                1.0
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_period() {
        let t: Vec<f64> = (0..5000).map(|i| i as f64 * 0.01).collect();
        let x: Vec<f64> = t.iter().map(|s| (2.0 * s).sin()).collect();
        let p = period_by_zero_crossing(&t, &x).unwrap();
        assert!((p - std::f64::consts::PI).abs() < 1e-4);
        assert!(period_by_zero_crossing(&t[..10], &x[..10]).is_err());
    }

    #[test]
    fn hausdorff_of_shifted_sets() {
        let a = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 2.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 1.0, 0.5]);
        // Point (2, 0) is √(1 + 0.25) from (1, 0.5).
        assert!((hausdorff(&a, &b).unwrap() - 1.25f64.sqrt()).abs() < 1e-12);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert!((diameter(&a) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn order_parameter_limits() {
        assert!((order_parameter(&[0.3; 10]) - 1.0).abs() < 1e-12);
        let spread: Vec<f64> = (0..8).map(|k| k as f64 * std::f64::consts::TAU / 8.0).collect();
        assert!(order_parameter(&spread) < 1e-12);
    }

    #[test]
    fn r_squared_perfect_and_mean() {
        let a = DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r_squared(&a, &a).unwrap(), vec![1.0]);
        let m = DMatrix::from_element(4, 1, 2.5);
        assert!(r_squared(&a, &m).unwrap()[0].abs() < 1e-12);
    }
}
