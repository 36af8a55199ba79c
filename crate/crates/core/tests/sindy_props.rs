use nalgebra::DMatrix;
use oscidisc_core::seed;
use oscidisc_core::sindy::{build_library, inlier_budget, stlsq, stlsq_trimmed, LibrarySpec};
use proptest::prelude::*;
use rand::Rng;

/// Random states, a cubic library and targets from a sparse truth plus noise.
fn problem(s: u64, m: usize, noise: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = seed::rng(s);
    let states = DMatrix::from_fn(m, 2, |_, _| rng.random_range(-1.5..1.5));
    let theta = build_library(&states, &LibrarySpec::polynomial(2, 3)).unwrap();
    let mut xi = DMatrix::zeros(theta.ncols(), 2);
    for k in 0..2 {
        for _ in 0..3 {
            let j = rng.random_range(0..theta.ncols());
            xi[(j, k)] = rng.random_range(0.3..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
    }
    let xdot = &theta * xi + DMatrix::from_fn(m, 2, |_, _| noise * rng.random_range(-1.0..1.0));
    (theta, xdot)
}

fn objective_on(theta: &DMatrix<f64>, xdot: &DMatrix<f64>, rows: &[usize]) -> f64 {
    let t = theta.select_rows(rows);
    let y = xdot.select_rows(rows);
    let fit = stlsq(&t, &y, 0.0, 1).unwrap();
    0.5 * (&t * &fit.xi - &y).norm_squared()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn surviving_coefficients_clear_the_threshold(s in any::<u64>(), lambda in 0.0f64..0.5, noise in 0.0f64..0.2) {
        let (theta, xdot) = problem(s, 120, noise);
        let fit = stlsq(&theta, &xdot, lambda, 20).unwrap();
        prop_assert!(fit.xi.iter().all(|&c| c == 0.0 || c.abs() >= lambda));
    }

    #[test]
    fn refit_on_active_set_is_a_fixed_point(s in any::<u64>(), lambda in 0.05f64..0.5, noise in 0.0f64..0.2) {
        let (theta, xdot) = problem(s, 120, noise);
        let fit = stlsq(&theta, &xdot, lambda, 50).unwrap();
        for k in 0..xdot.ncols() {
            let active: Vec<usize> = (0..theta.ncols()).filter(|&j| fit.xi[(j, k)] != 0.0).collect();
            if active.is_empty() {
                continue;
            }
            let sub = theta.select_columns(&active);
            let y = xdot.columns(k, 1).into_owned();
            let again = stlsq(&sub, &y, lambda, 50).unwrap();
            for (a, &j) in active.iter().enumerate() {
                prop_assert!((again.xi[(a, 0)] - fit.xi[(j, k)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn column_scaling_rescales_its_coefficient(s in any::<u64>(), col in 0usize..10, scale in 0.1f64..10.0) {
        let (theta, xdot) = problem(s, 80, 0.1);
        let fit = stlsq(&theta, &xdot, 0.0, 1).unwrap();
        let mut scaled = theta.clone();
        scaled.column_mut(col).scale_mut(scale);
        let refit = stlsq(&scaled, &xdot, 0.0, 1).unwrap();
        for k in 0..2 {
            let want = fit.xi[(col, k)] / scale;
            prop_assert!((refit.xi[(col, k)] - want).abs() <= 1e-8 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn trimming_weights_are_a_vertex(s in any::<u64>(), tf in 0.05f64..0.4, lambda in 0.0f64..0.3) {
        let (theta, mut xdot) = problem(s, 150, 0.01);
        let mut rng = seed::rng(s ^ 1);
        for i in 0..150 {
            if rng.random::<f64>() < 0.15 {
                xdot[(i, 0)] += rng.random_range(-5.0..5.0);
            }
        }
        let (_, trim) = stlsq_trimmed(&theta, &xdot, lambda, tf, 20, 100).unwrap();
        let m = theta.nrows();
        prop_assert_eq!(trim.h, inlier_budget(m, tf));
        prop_assert!(trim.v.iter().all(|&v| v == 0.0 || v == 1.0));
        prop_assert_eq!(trim.v.iter().sum::<f64>(), trim.h as f64);
        let trimmed = trim.trim_mask.iter().filter(|&&t| t).count() as f64 / m as f64;
        prop_assert!((trimmed - (1.0 - trim.h as f64 / m as f64)).abs() <= 1.0 / m as f64);
    }

    #[test]
    fn unthresholded_trim_objective_never_rises(s in any::<u64>(), tf in 0.05f64..0.4) {
        let (theta, mut xdot) = problem(s, 150, 0.05);
        let mut rng = seed::rng(s ^ 2);
        for i in 0..150 {
            if rng.random::<f64>() < 0.2 {
                xdot[(i, 1)] += rng.random_range(-3.0..3.0);
            }
        }
        let (_, trim) = stlsq_trimmed(&theta, &xdot, 0.0, tf, 20, 100).unwrap();
        for w in trim.objective.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-10) + 1e-14, "{:?}", trim.objective);
        }
    }

    #[test]
    fn trimmed_solution_beats_random_restarts(s in any::<u64>(), m in 30usize..120) {
        let mut rng = seed::rng(s);
        let states = DMatrix::from_fn(m, 2, |_, _| rng.random_range(-1.0..1.0));
        let theta = build_library(&states, &LibrarySpec::polynomial(2, 2)).unwrap();
        let mut xdot = DMatrix::from_fn(m, 1, |i, _| 1.0 - 2.0 * theta[(i, 1)] + 0.5 * theta[(i, 4)]
            + 0.01 * rng.random_range(-1.0..1.0));
        for _ in 0..2 {
            let i = rng.random_range(0..m);
            xdot[(i, 0)] += rng.random_range(2.0..6.0);
        }
        let tf = 2.0 / m as f64;
        let (_, trim) = stlsq_trimmed(&theta, &xdot, 0.0, tf, 20, 100).unwrap();
        prop_assert_eq!(trim.h, m - 2);
        let inliers: Vec<usize> = (0..m).filter(|&i| !trim.trim_mask[i]).collect();
        let ours = objective_on(&theta, &xdot, &inliers);
        let mut best = f64::INFINITY;
        for _ in 0..50 {
            let mut rows: Vec<usize> = rand::seq::index::sample(&mut rng, m, m - 2).into_vec();
            rows.sort_unstable();
            best = best.min(objective_on(&theta, &xdot, &rows));
        }
        prop_assert!(ours <= best * (1.0 + 1e-9) + 1e-12, "{} vs best restart {}", ours, best);
    }
}
