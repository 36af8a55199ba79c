use nalgebra::DMatrix;
use oscidisc_core::reduction::{dimension_from_singular_values, reduce, relative_errors, DimConvention};
use oscidisc_core::Trajectory;
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..14, 2usize..8).prop_flat_map(|(m, d)| {
        prop::collection::vec(-3.0f64..3.0, m * d).prop_map(move |v| DMatrix::from_vec(m, d, v))
    })
}

fn traj(x: DMatrix<f64>) -> Trajectory {
    let times = (0..x.nrows()).map(|i| i as f64).collect();
    Trajectory::with_default_labels(times, x, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn truncation_error_matches_tail_spectrum(x in matrix(), center in any::<bool>()) {
        prop_assume!(x.norm() > 1e-6);
        let k = x.nrows().min(x.ncols());
        let t = traj(x.clone());
        let mut prev = f64::INFINITY;
        for r in 1..=k {
            let (basis, _) = reduce(&t, r, center).unwrap();
            let gram = basis.modes.transpose() * &basis.modes;
            prop_assert!((gram - DMatrix::identity(r, r)).amax() < 1e-10);
            prop_assert!(basis.singular_values.as_slice().windows(2).all(|w| w[0] >= w[1]));

            let recon = basis.lift(&basis.project(&x));
            let err = (&x - &recon).norm();
            let tail: f64 = basis.singular_values.iter().skip(r).map(|s| s * s).sum::<f64>().sqrt();
            prop_assert!((err - tail).abs() <= 1e-10 * (1.0 + x.norm()), "r={}: {} vs {}", r, err, tail);
            prop_assert!(err <= prev + 1e-12);
            prev = err;

            let again = basis.lift(&basis.project(&recon));
            prop_assert!((&again - &recon).amax() < 1e-10 * (1.0 + x.amax()));
        }
        if !center {
            prop_assert!(prev <= 1e-8 * x.norm());
        }
    }

    #[test]
    fn relative_errors_fall_to_zero(s in prop::collection::vec(0.0f64..10.0, 1..12)) {
        let mut s = s;
        s.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(s[0] > 0.0);
        let e = relative_errors(&s);
        prop_assert!((e[0] - 1.0).abs() < 1e-12);
        prop_assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        prop_assert!(e[s.len()].abs() < 1e-8);
    }

    #[test]
    fn dimension_is_monotone_in_threshold(
        s in prop::collection::vec(0.0f64..10.0, 1..12),
        taus in prop::collection::vec(0.01f64..=1.0, 1..8),
        energy in any::<bool>(),
    ) {
        let mut s = s;
        s.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(s[0] > 0.0);
        let mut taus = taus;
        taus.sort_by(f64::total_cmp);
        let conv = if energy { DimConvention::Energy } else { DimConvention::Error };
        let dims = dimension_from_singular_values(&s, &taus, conv).unwrap();
        prop_assert!(dims.windows(2).all(|w| w[0] <= w[1]), "{:?} for {:?}", dims, taus);
        prop_assert!(dims.iter().all(|&r| (1..=s.len()).contains(&r)));
    }
}
