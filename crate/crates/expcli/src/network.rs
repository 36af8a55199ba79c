//! Network pipelines: simulate a random oscillator network, reduce it to a
//! few SVD modes and discover models of the mode dynamics.

use std::path::Path;

use nalgebra::DMatrix;
use oscidisc_core::analysis::{diameter, hausdorff, order_parameter, period_at_level};
use oscidisc_core::hybrid::{fit_hybrid, HybridFit, Scale};
use oscidisc_core::netsim::{
    build_er_adjacency, observables, random_initial_state, sample_kuramoto, sample_rayleigh, simulate_every,
    Family, NetworkSpec,
};
use oscidisc_core::ode::Rk4;
use oscidisc_core::reduction::{estimate_dimension, reduce, reduce_blockwise, Block, ReducedBasis};
use oscidisc_core::seed::{derive, rng};
use oscidisc_core::sindy::{fit_sparse, model_to_text_named, simulate_model, SparseModel, TrimResult};
use oscidisc_core::trajectory::mode_labels;
use oscidisc_core::{Error, Trajectory};
use serde::Serialize;

use crate::canonical::{hybrid_options, region_summaries, trim_trajectory, RegionSummary, TrimSummary};
use crate::config::{ExperimentConfig, NetworkConfig, ReductionConfig};
use crate::error::{RunResult, StageExt};
use crate::metrics::{crossing_indices, pooled_r_squared};
use crate::output::{ensure_dir, write_int_column, write_json, write_trim_mask};

/// Builds the network described by `net` and draws its initial state. Node
/// order is Kuramoto, FHN, Rössler, Rayleigh.
pub fn build_network(net: &NetworkConfig, seed: u64) -> oscidisc_core::Result<(NetworkSpec, Vec<f64>)> {
    let mut params = rng(derive(seed, &[1]));
    let mut nodes = Vec::with_capacity(net.n());
    for _ in 0..net.n_kuramoto {
        nodes.push(sample_kuramoto(&mut params, net.omega_mean, net.omega_half_width));
    }
    nodes.extend(std::iter::repeat_n(net.fhn, net.n_fhn));
    nodes.extend(std::iter::repeat_n(net.rossler, net.n_rossler));
    for _ in 0..net.n_rayleigh {
        nodes.push(sample_rayleigh(&mut params, net.epsilon_range[0], net.epsilon_range[1]));
    }
    let adjacency = build_er_adjacency(nodes.len(), net.p, derive(seed, &[0]));
    let spec = NetworkSpec::new(nodes, adjacency, net.coupling, net.cross_coupling)?;
    let x0 = random_initial_state(&spec, &mut rng(derive(seed, &[2])));
    Ok((spec, x0))
}

/// Simulates the network and keeps the samples after the transient.
pub fn simulate_network(net: &NetworkConfig, seed: u64) -> oscidisc_core::Result<(NetworkSpec, Trajectory)> {
    let (spec, x0) = build_network(net, seed)?;
    let traj = simulate_every(&spec, &x0, 0.0, net.t_end, net.dt, net.record_every)?;
    Ok((spec, traj.after(net.transient)))
}

/// Global or block-wise SVD reduction as configured.
pub fn reduce_observed(
    spec: &NetworkSpec,
    observed: &Trajectory,
    red: &ReductionConfig,
) -> oscidisc_core::Result<(ReducedBasis, Trajectory)> {
    if red.blocks.is_empty() {
        return reduce(observed, red.r, red.center);
    }
    let blocks: Vec<Block> = red
        .blocks
        .iter()
        .map(|b| Block {
            label: b.label.clone(),
            columns: spec.component_columns(b.component, None),
        })
        .collect();
    let ranks: Vec<usize> = red.blocks.iter().map(|b| b.r).collect();
    reduce_blockwise(observed, &blocks, &ranks)
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeCounts {
    pub kuramoto: usize,
    pub fhn: usize,
    pub rossler: usize,
    pub rayleigh: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionSummary {
    pub r: usize,
    pub blocks: Vec<String>,
    pub centered: bool,
    /// `‖X_r‖_F / ‖X‖_F` for the rank-r reconstruction.
    pub energy_retained: f64,
    /// `‖X − X_r‖_F / ‖X‖_F`.
    pub relative_error: f64,
    pub leading_singular_values: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub dimensions: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleSummary {
    pub period: f64,
    pub cycles_observed: usize,
    /// Hausdorff distance between the last two complete cycles of the
    /// reduced trajectory.
    pub cycle_to_cycle_hausdorff: f64,
    pub cycle_diameter: f64,
    pub cycle_to_cycle_rel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SindySummary {
    pub library: Vec<String>,
    pub lambda: f64,
    pub equations: Vec<String>,
    pub active_per_equation: Vec<usize>,
    pub ill_conditioned: bool,
    pub reduced_period: Option<f64>,
    pub model_period: Option<f64>,
    pub period_rel_err: Option<f64>,
    pub blowup: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkHybridSummary {
    pub trim: TrimSummary,
    pub fast_segments: usize,
    pub fast_segments_per_period: Option<f64>,
    pub regions: Vec<RegionSummary>,
    pub holdout_every: usize,
    pub heldout_samples: usize,
    /// Pooled one-step R² of held-out increments, per mode.
    pub heldout_r_squared: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkReport {
    pub experiment: &'static str,
    pub name: String,
    pub seed: u64,
    pub nodes: NodeCounts,
    pub edges: usize,
    pub samples: usize,
    pub window_start: f64,
    pub window_end: f64,
    /// Time-averaged Kuramoto order parameter over the window.
    pub order_parameter_mean: Option<f64>,
    pub order_parameter_final: Option<f64>,
    /// Mean peak-to-peak range of the FHN `v` components over the window.
    pub fhn_v_range: Option<f64>,
    pub reduction: ReductionSummary,
    pub cycle: Option<CycleSummary>,
    pub sindy: Option<SindySummary>,
    pub hybrid: Option<NetworkHybridSummary>,
}

#[derive(Debug, Clone)]
pub struct NetworkRun {
    pub spec: NetworkSpec,
    pub observed: Trajectory,
    pub basis: ReducedBasis,
    pub reduced: Trajectory,
    pub sindy_model: Option<SparseModel>,
    pub sindy_sim: Option<Trajectory>,
    pub trim: Option<TrimResult>,
    pub hybrid: Option<HybridFit>,
    pub report: NetworkReport,
}

fn order_parameter_series(spec: &NetworkSpec, raw: &Trajectory) -> Option<Vec<f64>> {
    let cols = spec.phase_columns();
    if cols.is_empty() {
        return None;
    }
    Some(
        (0..raw.len())
            .map(|i| {
                let phases: Vec<f64> = cols.iter().map(|&c| raw.states()[(i, c)]).collect();
                order_parameter(&phases)
            })
            .collect(),
    )
}

fn fhn_v_range(spec: &NetworkSpec, raw: &Trajectory) -> Option<f64> {
    let cols = spec.component_columns(0, Some(Family::Fhn));
    if cols.is_empty() {
        return None;
    }
    let total: f64 = cols
        .iter()
        .map(|&c| {
            let col = raw.states().column(c);
            col.max() - col.min()
        })
        .sum();
    Some(total / cols.len() as f64)
}

fn reduction_summary(
    observed: &Trajectory,
    basis: &ReducedBasis,
    red: &ReductionConfig,
) -> oscidisc_core::Result<ReductionSummary> {
    let x = observed.states();
    let recon = basis.lift(&basis.project(x));
    let total = x.norm();
    let err = (x - &recon).norm();
    let retained = match &basis.mean {
        // With centering the reconstruction includes the mean, so compare
        // fluctuations only.
        Some(mu) => {
            let fluct = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - mu[j]);
            let fl = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| recon[(i, j)] - mu[j]);
            fl.norm() / fluct.norm()
        }
        None => recon.norm() / total,
    };
    Ok(ReductionSummary {
        r: basis.r,
        blocks: red.blocks.iter().map(|b| b.label.clone()).collect(),
        centered: basis.mean.is_some(),
        energy_retained: retained,
        relative_error: err / total,
        leading_singular_values: basis.singular_values.iter().take(20).copied().collect(),
        thresholds: red.thresholds.clone(),
        dimensions: estimate_dimension(observed, &red.thresholds, red.dim_convention)?,
    })
}

/// Period and closure of the reduced orbit, from crossings of the first
/// mode through its mean.
pub fn cycle_summary(reduced: &Trajectory) -> Option<CycleSummary> {
    let u: Vec<f64> = reduced.states().column(0).iter().copied().collect();
    let level = u.iter().sum::<f64>() / u.len().max(1) as f64;
    let idx = crossing_indices(&u, level);
    if idx.len() < 3 {
        return None;
    }
    let period = period_at_level(reduced.times(), &u, level).ok()?;
    let k = idx.len();
    let x = reduced.states();
    let a = x.rows(idx[k - 3], idx[k - 2] - idx[k - 3]).into_owned();
    let b = x.rows(idx[k - 2], idx[k - 1] - idx[k - 2]).into_owned();
    let h = hausdorff(&a, &b).ok()?;
    let diam = diameter(&b);
    Some(CycleSummary {
        period,
        cycles_observed: k - 1,
        cycle_to_cycle_hausdorff: h,
        cycle_diameter: diam,
        cycle_to_cycle_rel: h / diam,
    })
}

fn mode_period(traj: &Trajectory) -> Option<f64> {
    let u: Vec<f64> = traj.states().column(0).iter().copied().collect();
    let level = u.iter().sum::<f64>() / u.len().max(1) as f64;
    period_at_level(traj.times(), &u, level).ok()
}

/// Pooled R² of one-step increments on held-out samples, each predicted
/// with the model its sample was assigned to.
pub fn heldout_one_step_r2(fit: &HybridFit, traj: &Trajectory, holdout: &[bool]) -> (usize, Vec<f64>) {
    let d = traj.dim();
    let x = traj.states();
    let mut rk = Rk4::new(d);
    let mut actual = Vec::new();
    let mut predicted = Vec::new();
    for i in 0..traj.len().saturating_sub(1) {
        if !holdout[i] {
            continue;
        }
        let model = fit.model.model(fit.sample_labels[i]);
        let mut features = vec![0.0; model.library.len()];
        let x0: Vec<f64> = x.row(i).iter().copied().collect();
        let mut xn = x0.clone();
        let h = traj.times()[i + 1] - traj.times()[i];
        let mut f = |_: f64, s: &[f64], out: &mut [f64]| model.eval_into(s, &mut features, out);
        rk.step(&mut f, traj.times()[i], &mut xn, h);
        actual.push((0..d).map(|k| x[(i + 1, k)] - x0[k]).collect::<Vec<f64>>());
        predicted.push((0..d).map(|k| xn[k] - x0[k]).collect::<Vec<f64>>());
    }
    let n = actual.len();
    (n, pooled_r_squared(&actual, &predicted))
}

pub fn run_network(cfg: &ExperimentConfig) -> RunResult<NetworkRun> {
    let net = cfg.network.as_ref().expect("validated config has [network]");
    let red = cfg.reduction_or_default();
    let (spec, raw) = simulate_network(net, cfg.seed).stage("simulate")?;
    if raw.len() < 3 {
        return Err(Error::InvalidArgument("fewer than 3 samples after the transient".into())).stage("simulate");
    }
    let order = order_parameter_series(&spec, &raw);
    let observed = observables(&spec, &raw).stage("observables")?;
    let (basis, reduced) = reduce_observed(&spec, &observed, &red).stage("reduce")?;
    let reduced = reduced.with_labels(mode_labels(basis.r)).stage("reduce")?;
    let names = mode_labels(basis.r);
    let cycle = cycle_summary(&reduced);

    let mut sindy_model = None;
    let mut sindy_sim = None;
    let sindy = match &cfg.sindy {
        None => None,
        Some(s) => {
            let lib = s.library.build(basis.r).stage("sindy")?;
            let xdot = reduced.derivatives().expect("projected derivatives");
            let model = fit_sparse(reduced.states(), xdot, &lib, s.lambda, s.max_iter).stage("sindy")?;
            let t0 = reduced.times()[0];
            let span = s.sim_time.unwrap_or(reduced.times()[reduced.len() - 1] - t0);
            let sim = simulate_model(&model, &reduced.state(0), t0, t0 + span, s.sim_dt.unwrap_or(net.dt));
            let reduced_period = mode_period(&reduced);
            let (model_period, blowup) = match &sim {
                Ok(tr) => (mode_period(tr), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let summary = SindySummary {
                library: lib.term_names(),
                lambda: s.lambda,
                equations: model_to_text_named(&model, &names),
                active_per_equation: (0..model.dim()).map(|k| model.active_in(k)).collect(),
                ill_conditioned: model.metadata.ill_conditioned,
                reduced_period,
                model_period,
                period_rel_err: reduced_period.zip(model_period).map(|(a, b)| (a - b).abs() / a),
                blowup,
            };
            sindy_sim = sim.ok().map(|t| t.with_labels(names.clone())).transpose().stage("sindy")?;
            sindy_model = Some(model);
            Some(summary)
        }
    };

    let mut trim_out = None;
    let mut hybrid_fit = None;
    let hybrid = match (&cfg.trim, &cfg.hybrid) {
        (Some(t), Some(h)) => {
            let (_, trim, trim_names) = trim_trajectory(&reduced, t).stage("trim")?;
            let mut options = hybrid_options(h, basis.r).stage("hybrid")?;
            let holdout: Vec<bool> = (0..reduced.len())
                .map(|i| h.holdout_every > 1 && i % h.holdout_every == h.holdout_every - 1)
                .collect();
            options.holdout = Some(holdout.clone());
            let fit = fit_hybrid(&reduced, &trim, &options).stage("hybrid")?;
            let (heldout_samples, r2) = heldout_one_step_r2(&fit, &reduced, &holdout);
            let fast_segments = fit.segments.iter().filter(|s| s.scale == Scale::Fast).count();
            let span = reduced.times()[reduced.len() - 1] - reduced.times()[0];
            let summary = NetworkHybridSummary {
                trim: TrimSummary::new(&trim, trim_names),
                fast_segments,
                fast_segments_per_period: cycle.as_ref().map(|c| fast_segments as f64 * c.period / span),
                regions: region_summaries(&fit, &names),
                holdout_every: h.holdout_every,
                heldout_samples,
                heldout_r_squared: r2,
            };
            trim_out = Some(trim);
            hybrid_fit = Some(fit);
            Some(summary)
        }
        _ => None,
    };

    let count = |f: Family| spec.nodes().iter().filter(|n| n.family() == f).count();
    let report = NetworkReport {
        experiment: cfg.experiment.as_str(),
        name: cfg.name.clone(),
        seed: cfg.seed,
        nodes: NodeCounts {
            kuramoto: count(Family::Kuramoto),
            fhn: count(Family::Fhn),
            rossler: count(Family::Rossler),
            rayleigh: count(Family::Rayleigh),
        },
        edges: spec.adjacency().edge_count(),
        samples: raw.len(),
        window_start: raw.times()[0],
        window_end: raw.times()[raw.len() - 1],
        order_parameter_mean: order.as_ref().map(|r| r.iter().sum::<f64>() / r.len() as f64),
        order_parameter_final: order.as_ref().and_then(|r| r.last().copied()),
        fhn_v_range: fhn_v_range(&spec, &raw),
        reduction: reduction_summary(&observed, &basis, &red).stage("reduce")?,
        cycle,
        sindy,
        hybrid,
    };
    Ok(NetworkRun {
        spec,
        observed,
        basis,
        reduced,
        sindy_model,
        sindy_sim,
        trim: trim_out,
        hybrid: hybrid_fit,
        report,
    })
}

pub fn write_network(run: &NetworkRun, dir: &Path) -> RunResult<()> {
    ensure_dir(dir)?;
    run.observed.write_binary(dir.join("observables.bin")).stage("write")?;
    run.reduced.write_csv(dir.join("modes.csv")).stage("write")?;
    run.basis
        .write_csv(dir.join("basis.csv"), dir.join("singular_values.csv"))
        .stage("write")?;
    if let Some(m) = &run.sindy_model {
        m.write_json(dir.join("sindy_model.json")).stage("write")?;
    }
    if let Some(sim) = &run.sindy_sim {
        sim.write_csv(dir.join("sindy_sim.csv")).stage("write")?;
    }
    if let Some(trim) = &run.trim {
        write_trim_mask(&dir.join("trim_mask.csv"), run.reduced.times(), &trim.trim_mask)?;
    }
    if let Some(fit) = &run.hybrid {
        fit.model.write_json(dir.join("hybrid_model.json")).stage("write")?;
        write_int_column(&dir.join("training_labels.csv"), run.reduced.times(), "label", &fit.sample_labels)?;
    }
    write_json(&dir.join("report.json"), &run.report)
}
