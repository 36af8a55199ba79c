//! Single relaxation oscillator: simulate, trim, fit a hybrid model and
//! re-simulate it over one cycle.

use std::path::Path;

use nalgebra::DMatrix;
use oscidisc_core::analysis::{diameter, hausdorff, period_at_level};
use oscidisc_core::hybrid::{fit_hybrid, simulate_hybrid, HybridFit, HybridOptions, HybridSimulation, Scale};
use oscidisc_core::netsim::{canonical_oscillator, CanonicalOscillator};
use oscidisc_core::sindy::{build_library, model_to_text_named, stlsq_trimmed, StlsqFit, TrimResult};
use oscidisc_core::{Error, Trajectory};
use serde::Serialize;

use crate::config::{CanonicalConfig, ExperimentConfig, HybridConfig, TrimConfig};
use crate::error::{RunResult, StageExt};
use crate::metrics::{crossing_indices, cyclic_runs, first_return, top_decile_share};
use crate::output::{ensure_dir, write_int_column, write_json, write_labeled_csv, write_trim_mask};

#[derive(Debug, Clone, Serialize)]
pub struct TrimSummary {
    pub samples: usize,
    pub h: usize,
    pub trimmed: usize,
    pub trimmed_fraction: f64,
    pub outer_iterations: usize,
    pub final_objective: f64,
    pub library: Vec<String>,
}

impl TrimSummary {
    pub fn new(trim: &TrimResult, library: Vec<String>) -> Self {
        let trimmed = trim.trim_mask.iter().filter(|&&b| b).count();
        Self {
            samples: trim.len(),
            h: trim.h,
            trimmed,
            trimmed_fraction: trimmed as f64 / trim.len().max(1) as f64,
            outer_iterations: trim.outer_iterations,
            final_objective: trim.objective.last().copied().unwrap_or(f64::NAN),
            library,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionSummary {
    pub label: String,
    pub scale: Scale,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub samples: usize,
    pub active_terms: usize,
    pub equations: Vec<String>,
}

pub fn region_summaries(fit: &HybridFit, names: &[String]) -> Vec<RegionSummary> {
    let mut out: Vec<RegionSummary> = fit
        .model
        .regions
        .iter()
        .enumerate()
        .map(|(k, r)| RegionSummary {
            label: r.bounds.label.clone(),
            scale: r.scale,
            lo: r.bounds.lo.clone(),
            hi: r.bounds.hi.clone(),
            samples: fit.sample_labels.iter().filter(|&&l| l == k + 1).count(),
            active_terms: r.model.active_count(),
            equations: model_to_text_named(&r.model, names),
        })
        .collect();
    out.push(RegionSummary {
        label: "slow".into(),
        scale: Scale::Slow,
        lo: fit.model.hull_lo.clone(),
        hi: fit.model.hull_hi.clone(),
        samples: fit.sample_labels.iter().filter(|&&l| l == 0).count(),
        active_terms: fit.model.slow_model.active_count(),
        equations: model_to_text_named(&fit.model.slow_model, names),
    });
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CanonicalReport {
    pub experiment: &'static str,
    pub name: String,
    pub system: CanonicalOscillator,
    pub true_period: f64,
    pub window_start: f64,
    pub window_end: f64,
    pub periods: usize,
    pub trim: TrimSummary,
    /// Share of trimmed samples in the top decile of the derivative norm.
    pub trimmed_in_top_speed_decile: f64,
    pub fast_segments: usize,
    pub fast_segments_per_period: f64,
    pub regions: Vec<RegionSummary>,
    pub simulated_period: Option<f64>,
    pub cycle_period_rel_err: Option<f64>,
    pub cycle_hausdorff: f64,
    pub cycle_diameter: f64,
    pub cycle_hausdorff_rel: f64,
    /// Cyclic sequence of active models over one simulated period.
    pub label_sequence: Vec<String>,
    /// Entries into each fast region over one simulated period.
    pub fast_visits_per_period: Vec<usize>,
    pub training_label_agreement: f64,
    pub extrapolated: bool,
}

/// In-memory results of a canonical run.
#[derive(Debug, Clone)]
pub struct CanonicalRun {
    /// Post-transient window of whole periods used for fitting.
    pub window: Trajectory,
    pub trim: TrimResult,
    pub trim_fit: StlsqFit,
    pub fit: HybridFit,
    pub simulation: HybridSimulation,
    pub report: CanonicalReport,
}

pub fn hybrid_options(h: &HybridConfig, var_count: usize) -> oscidisc_core::Result<HybridOptions> {
    Ok(HybridOptions {
        slow_library: h.slow_library.build(var_count)?,
        fast_libraries: vec![h.fast_library.build(var_count)?],
        slow_lambda: h.slow_lambda,
        fast_lambda: h.fast_lambda,
        max_iter: h.max_iter,
        min_run: h.min_run,
        margin_fraction: h.margin_fraction,
        partition: h.partition,
        holdout: None,
    })
}

/// Trimmed STLSQ on the trajectory's states against its derivatives.
pub fn trim_trajectory(traj: &Trajectory, t: &TrimConfig) -> oscidisc_core::Result<(StlsqFit, TrimResult, Vec<String>)> {
    let lib = t.library.build(traj.dim())?;
    let xdot = traj
        .derivatives()
        .ok_or_else(|| Error::InvalidArgument("trimming needs derivatives".into()))?;
    let theta = build_library(traj.states(), &lib)?;
    let (fit, trim) = stlsq_trimmed(&theta, xdot, t.lambda, t.trim_fraction, t.max_iter, t.max_outer_iter)?;
    Ok((fit, trim, lib.term_names()))
}

/// Post-transient window spanning `periods` whole periods, starting at an
/// upward zero crossing of the anchor column, and the mean period.
fn cycle_window(traj: &Trajectory, c: &CanonicalConfig) -> oscidisc_core::Result<(Trajectory, f64)> {
    let post = traj.after(c.transient);
    let signal: Vec<f64> = post.states().column(c.anchor).iter().copied().collect();
    let idx = crossing_indices(&signal, 0.0);
    if idx.len() < c.periods + 1 {
        return Err(Error::InvalidArgument(format!(
            "found {} anchor crossings after the transient, need {}",
            idx.len(),
            c.periods + 1
        )));
    }
    let period = period_at_level(post.times(), &signal, 0.0)?;
    Ok((post.slice(idx[0], idx[c.periods]), period))
}

fn rows(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    m.rows(0, n.min(m.nrows())).into_owned()
}

pub fn run_canonical(cfg: &ExperimentConfig) -> RunResult<CanonicalRun> {
    let c = cfg.canonical.as_ref().expect("validated config has [canonical]");
    let tcfg = cfg.trim.as_ref().expect("validated config has [trim]");
    let hcfg = cfg.hybrid.as_ref().expect("validated config has [hybrid]");

    let traj = canonical_oscillator(c.system, &c.x0, 0.0, c.t_end, c.dt).stage("simulate")?;
    let (window, true_period) = cycle_window(&traj, c).stage("window")?;
    let names = c.system.labels();

    let (trim_fit, trim, trim_names) = trim_trajectory(&window, tcfg).stage("trim")?;
    let options = hybrid_options(hcfg, 2).stage("hybrid")?;
    let fit = fit_hybrid(&window, &trim, &options).stage("hybrid")?;

    let x0 = window.state(0);
    let t_sim = c.sim_periods * true_period;
    let simulation = simulate_hybrid(&fit.model, &x0, 0.0, t_sim, c.dt).stage("simulate_hybrid")?;

    // One simulated period, closed at the first return to the anchor section.
    let anchor_true: Vec<f64> = window.states().column(c.anchor).iter().copied().collect();
    let amp = anchor_true.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - anchor_true.iter().cloned().fold(f64::INFINITY, f64::min);
    let sim_states = simulation.trajectory.states();
    let anchor_sim: Vec<f64> = sim_states.column(c.anchor).iter().copied().collect();
    let ret = first_return(simulation.trajectory.times(), &anchor_sim, 0.0, 0.25 * amp);
    let simulated_period = ret.map(|(_, t)| t);
    let sim_cycle_len = ret.map_or(simulation.trajectory.len(), |(i, _)| i);

    let per_period = window.len() / c.periods;
    let true_cycle = rows(window.states(), per_period);
    let sim_cycle = rows(sim_states, sim_cycle_len);
    let cycle_hausdorff = hausdorff(&sim_cycle, &true_cycle).stage("compare")?;
    let cycle_diameter = diameter(&true_cycle);

    let cycle_labels = &simulation.labels[..sim_cycle_len];
    let runs = cyclic_runs(cycle_labels);
    let label_sequence = runs.iter().map(|&l| fit.model.label_name(l).to_string()).collect();
    let fast_visits_per_period = (1..=fit.model.regions.len())
        .map(|k| runs.iter().filter(|&&l| l == k).count())
        .collect();

    let speed: Vec<f64> = window
        .derivatives()
        .expect("simulated trajectories carry derivatives")
        .row_iter()
        .map(|r| r.norm())
        .collect();
    let fast_segments = fit.segments.iter().filter(|s| s.scale == Scale::Fast).count();
    let agreement = training_agreement(&fit, window.states());

    let report = CanonicalReport {
        experiment: "canonical_hybrid",
        name: cfg.name.clone(),
        system: c.system,
        true_period,
        window_start: window.times()[0],
        window_end: *window.times().last().unwrap_or(&0.0),
        periods: c.periods,
        trim: TrimSummary::new(&trim, trim_names),
        trimmed_in_top_speed_decile: top_decile_share(&speed, &trim.trim_mask),
        fast_segments,
        fast_segments_per_period: fast_segments as f64 / c.periods as f64,
        regions: region_summaries(&fit, &names),
        simulated_period,
        cycle_period_rel_err: simulated_period.map(|p| (p - true_period).abs() / true_period),
        cycle_hausdorff,
        cycle_diameter,
        cycle_hausdorff_rel: cycle_hausdorff / cycle_diameter,
        label_sequence,
        fast_visits_per_period,
        training_label_agreement: agreement,
        extrapolated: simulation.extrapolated,
    };
    let window = window.with_labels(names).stage("window")?;
    Ok(CanonicalRun {
        window,
        trim,
        trim_fit,
        fit,
        simulation,
        report,
    })
}

/// Share of training samples whose geometric dispatch matches the label
/// assigned during fitting.
pub fn training_agreement(fit: &HybridFit, states: &DMatrix<f64>) -> f64 {
    let n = states.nrows().min(fit.sample_labels.len());
    if n == 0 {
        return f64::NAN;
    }
    let same = (0..n)
        .filter(|&i| {
            let x: Vec<f64> = states.row(i).iter().copied().collect();
            fit.model.dispatch(&x) == fit.sample_labels[i]
        })
        .count();
    same as f64 / n as f64
}

pub fn write_canonical(run: &CanonicalRun, dir: &Path) -> RunResult<()> {
    ensure_dir(dir)?;
    run.window.write_csv(dir.join("trajectory.csv")).stage("write")?;
    write_trim_mask(&dir.join("trim_mask.csv"), run.window.times(), &run.trim.trim_mask)?;
    run.fit.model.write_json(dir.join("hybrid_model.json")).stage("write")?;
    write_int_column(&dir.join("training_labels.csv"), run.window.times(), "label", &run.fit.sample_labels)?;
    let sim = run
        .simulation
        .trajectory
        .clone()
        .with_labels(run.window.labels().to_vec())
        .stage("write")?;
    write_labeled_csv(&dir.join("hybrid_sim.csv"), &sim, &run.simulation.labels)?;
    write_json(&dir.join("report.json"), &run.report)
}
