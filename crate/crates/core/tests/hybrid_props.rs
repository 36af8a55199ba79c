use std::f64::consts::TAU;

use nalgebra::DMatrix;
use oscidisc_core::hybrid::{
    fit_hybrid, merge_fast_regions, segment_trajectory, simulate_hybrid, FastRegion, HybridFit, HybridOptions, Scale,
    Segment,
};
use oscidisc_core::seed;
use oscidisc_core::sindy::{LibrarySpec, TrimResult};
use oscidisc_core::Trajectory;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

/// Two turns of a limit cycle `(r cos t, r sin t)` with a flagged arc of
/// width `w` starting at each angle in `arcs`.
fn circle_fit(arcs: &[f64], w: f64) -> (Trajectory, HybridFit) {
    let m = 1200;
    let times: Vec<f64> = (0..m).map(|i| i as f64 * 2.0 * TAU / m as f64).collect();
    let states = DMatrix::from_fn(m, 2, |i, k| if k == 0 { times[i].cos() } else { times[i].sin() });
    let derivs = DMatrix::from_fn(m, 2, |i, k| if k == 0 { -times[i].sin() } else { times[i].cos() });
    let mask: Vec<bool> = times
        .iter()
        .map(|t| arcs.iter().any(|a| (t - a).rem_euclid(TAU) < w))
        .collect();
    let traj = Trajectory::with_default_labels(times, states, Some(derivs)).unwrap();
    let lin = LibrarySpec::polynomial(2, 1);
    let fit = fit_hybrid(&traj, &TrimResult::from_mask(mask), &HybridOptions::new(lin.clone(), lin, 0.0)).unwrap();
    (traj, fit)
}

fn boxes(rs: &[FastRegion]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut v: Vec<(Vec<f64>, Vec<f64>)> = rs.iter().map(|r| (r.lo.clone(), r.hi.clone())).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn random_segments(s: u64, m: usize) -> (DMatrix<f64>, Vec<Segment>) {
    let mut rng = seed::rng(s);
    let states = DMatrix::from_fn(m, 2, |_, _| rng.random_range(-1.0..1.0));
    let mask: Vec<bool> = (0..m).map(|_| rng.random::<f64>() < 0.3).collect();
    let segs = segment_trajectory(m, &TrimResult::from_mask(mask), 1).unwrap();
    (states, segs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dispatch_is_total_and_deterministic(
        a0 in 0.0f64..TAU,
        gap in 1.5f64..3.0,
        points in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..200),
    ) {
        let (_, fit) = circle_fit(&[a0, a0 + gap], 0.5);
        let model = &fit.model;
        for (x, y) in points {
            let p = [x, y];
            let label = model.dispatch(&p);
            prop_assert!(label <= model.regions.len());
            prop_assert_eq!(label, model.dispatch(&p));
            let first = model.regions.iter().position(|r| r.bounds.contains(&p));
            prop_assert_eq!(label, first.map_or(0, |k| k + 1));
        }
    }

    #[test]
    fn merge_is_order_independent_and_idempotent(s in any::<u64>(), m in 10usize..80, margin in 0.0f64..0.1) {
        let (states, segs) = random_segments(s, m);
        let margin = vec![margin; 2];
        let merged = merge_fast_regions(&states, &segs, &margin).unwrap();
        let rs = &merged.regions;
        for i in 0..rs.len() {
            prop_assert!(rs[i].lo.iter().zip(&rs[i].hi).all(|(l, h)| l <= h));
            for j in (i + 1)..rs.len() {
                prop_assert!(!rs[i].overlaps(&rs[j]));
            }
        }

        let mut shuffled = segs.clone();
        shuffled.shuffle(&mut seed::rng(s ^ 7));
        let again = merge_fast_regions(&states, &shuffled, &margin).unwrap();
        prop_assert_eq!(boxes(&again.regions), boxes(rs));

        // Feeding each merged box back as a two-corner segment reproduces it.
        let corners = DMatrix::from_fn(2 * rs.len(), 2, |i, k| {
            let r = &rs[i / 2];
            if i % 2 == 0 { r.lo[k] } else { r.hi[k] }
        });
        let corner_segs: Vec<Segment> = (0..rs.len())
            .map(|k| Segment { scale: Scale::Fast, start: 2 * k, end: 2 * k + 2 })
            .collect();
        let remerged = merge_fast_regions(&corners, &corner_segs, &margin).unwrap();
        prop_assert_eq!(boxes(&remerged.regions), boxes(rs));
    }

    #[test]
    fn dispatch_agrees_with_training_labels(a0 in 0.0f64..TAU, gap in 1.5f64..3.0, w in 0.3f64..0.8) {
        let (traj, fit) = circle_fit(&[a0, a0 + gap], w);
        let n = traj.len();
        let same = (0..n).filter(|&i| fit.model.dispatch(&traj.state(i)) == fit.sample_labels[i]).count();
        prop_assert!(same as f64 / n as f64 >= 0.9, "agreement {}", same as f64 / n as f64);
    }
}

#[test]
fn simulated_labels_follow_the_segmentation() {
    let (traj, fit) = circle_fit(&[0.5, 3.0], 0.5);
    let dt = traj.times()[1] - traj.times()[0];
    let t_end = *traj.times().last().unwrap();
    let sim = simulate_hybrid(&fit.model, &traj.state(0), 0.0, t_end, dt).unwrap();
    let n = sim.labels.len().min(fit.sample_labels.len());
    let same = (0..n).filter(|&i| sim.labels[i] == fit.sample_labels[i]).count();
    assert!(same as f64 / n as f64 >= 0.9, "agreement {}", same as f64 / n as f64);
}
