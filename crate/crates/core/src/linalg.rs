//! Small dense least-squares and SVD helpers.

use nalgebra::{DMatrix, DVector};

/// Reciprocal condition number below which a Gram system is treated as
/// rank deficient.
const RCOND_FLOOR: f64 = 1e-13;

/// Solution of a least-squares problem.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: DVector<f64>,
    /// Set when the system was numerically rank deficient and the
    /// minimum-norm solution was returned.
    pub ill_conditioned: bool,
    /// Condition-number estimate of the column-scaled normal matrix.
    pub condition: f64,
}

/// Solves `G x = b` for a symmetric positive semi-definite Gram matrix
/// `G = AᵀA`, `b = Aᵀy`.
///
/// The system is diagonally scaled to unit diagonal first. A Cholesky solve
/// with one refinement step is used when the scaled matrix is well
/// conditioned; otherwise the minimum-norm solution is formed from the
/// eigendecomposition.
pub fn solve_gram(g: &DMatrix<f64>, b: &DVector<f64>) -> LstsqSolution {
    let p = g.nrows();
    if p == 0 {
        return LstsqSolution {
            x: DVector::zeros(0),
            ill_conditioned: false,
            condition: 1.0,
        };
    }
    let scale = DVector::from_iterator(
        p,
        (0..p).map(|i| {
            let d = g[(i, i)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        }),
    );
    let mut gs = g.clone();
    for j in 0..p {
        for i in 0..p {
            gs[(i, j)] *= scale[i] * scale[j];
        }
    }
    let bs = b.component_mul(&scale);

    let eig = gs.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    let deficient = lmax <= 0.0 || lmin <= RCOND_FLOOR * lmax;

    let ys = if !deficient {
        match gs.clone().cholesky() {
            Some(ch) => {
                let mut y = ch.solve(&bs);
                let r = &bs - &gs * &y;
                y += ch.solve(&r);
                Some(y)
            }
            None => None,
        }
    } else {
        None
    };
    let (ys, ill) = match ys {
        Some(y) => (y, false),
        None => {
            let cut = RCOND_FLOOR * lmax.max(f64::MIN_POSITIVE);
            let qtb = eig.eigenvectors.transpose() * &bs;
            let mut coef = DVector::zeros(p);
            for k in 0..p {
                if eig.eigenvalues[k] > cut {
                    coef[k] = qtb[k] / eig.eigenvalues[k];
                }
            }
            (&eig.eigenvectors * coef, true)
        }
    };
    LstsqSolution {
        x: ys.component_mul(&scale),
        ill_conditioned: ill,
        condition,
    }
}

/// Least-squares solution of `A x ≈ y` through the normal equations.
pub fn lstsq(a: &DMatrix<f64>, y: &DVector<f64>) -> LstsqSolution {
    let g = a.tr_mul(a);
    let b = a.tr_mul(y);
    solve_gram(&g, &b)
}

/// Singular values and right singular vectors (as columns) of `x`.
///
/// Signs are fixed so that the largest-magnitude entry of each vector is
/// positive, which makes bases reproducible across platforms.
pub fn right_singular(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let svd = x.clone().svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = DVector::from_iterator(order.len(), order.iter().map(|&k| svd.singular_values[k]));
    let mut v = DMatrix::zeros(x.ncols(), order.len());
    for (col, &k) in order.iter().enumerate() {
        let row = vt.row(k);
        let pivot = row
            .iter()
            .cloned()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..x.ncols() {
            v[(i, col)] = sign * row[i];
        }
    }
    (s, v)
}

/// Singular values of `x` in non-increasing order.
pub fn singular_values(x: &DMatrix<f64>) -> DVector<f64> {
    let mut s: Vec<f64> = x.clone().singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    DVector::from_vec(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_solution() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let sol = lstsq(&a, &y);
        assert!(!sol.ill_conditioned);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_gives_min_norm_and_flag() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let sol = lstsq(&a, &y);
        assert!(sol.ill_conditioned);
        assert!((sol.x[0] - 1.0).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn singular_vectors_are_sorted_and_signed() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, -3.0, 0.0, 0.0, 1.0, 0.0]);
        let (s, v) = right_singular(&x);
        assert!((s[0] - 3.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        assert!((v[(1, 0)] - 1.0).abs() < 1e-12);
        assert!((v[(0, 1)] - 1.0).abs() < 1e-12);
    }
}
