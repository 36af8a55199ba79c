use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::region::{default_margin, merge_fast_regions, FastRegion};
use super::segment::{segment_trajectory, Scale, Segment};
use crate::error::{Error, Result};
use crate::ode::{Rk4, TimeGrid};
use crate::sindy::{build_library, stlsq, LibrarySpec, SparseModel, SparseModelDoc, TrimResult};
use crate::trajectory::Trajectory;

/// How trimmed samples partition the state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    /// Merged boxes around fast segments; the slow model covers everything
    /// else. Samples are assigned to the first box containing them.
    #[default]
    FastBoxes,
    /// Every merged fast region and every group of slow segments gets its
    /// own model. A slow segment belongs to the group of the fast region
    /// that precedes it (cyclically), and samples are assigned by segment.
    PerSegment,
}

/// Fitting options for [`fit_hybrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct HybridOptions {
    pub slow_library: LibrarySpec,
    /// One library per fast region, in region order; a single entry is
    /// shared by all regions.
    pub fast_libraries: Vec<LibrarySpec>,
    pub slow_lambda: f64,
    pub fast_lambda: f64,
    pub max_iter: usize,
    pub min_run: usize,
    /// Box padding as a fraction of each dimension's data range.
    pub margin_fraction: f64,
    pub partition: Partition,
    /// Samples excluded from every fit, e.g. for validation.
    pub holdout: Option<Vec<bool>>,
}

impl HybridOptions {
    pub fn new(slow_library: LibrarySpec, fast_library: LibrarySpec, lambda: f64) -> Self {
        Self {
            slow_library,
            fast_libraries: vec![fast_library],
            slow_lambda: lambda,
            fast_lambda: lambda,
            max_iter: 20,
            min_run: 3,
            margin_fraction: 0.02,
            partition: Partition::FastBoxes,
            holdout: None,
        }
    }

    fn fast_library(&self, k: usize) -> &LibrarySpec {
        if self.fast_libraries.len() == 1 {
            &self.fast_libraries[0]
        } else {
            &self.fast_libraries[k]
        }
    }
}

/// Region box and the model used inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub bounds: FastRegion,
    pub scale: Scale,
    pub model: SparseModel,
}

/// Switched system: the first region containing the state supplies the
/// dynamics, otherwise the slow model does.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub regions: Vec<Region>,
    pub slow_model: SparseModel,
    pub state_dim: usize,
    /// Bounding box of the training data.
    pub hull_lo: Vec<f64>,
    pub hull_hi: Vec<f64>,
}

/// Audit label of the model in charge: `0` is the slow model, `k ≥ 1` is
/// region `k − 1`.
pub type ModelLabel = usize;

impl HybridModel {
    /// Index of the first region containing `x`.
    pub fn region_of(&self, x: &[f64]) -> Option<usize> {
        self.regions.iter().position(|r| r.bounds.contains(x))
    }

    pub fn dispatch(&self, x: &[f64]) -> ModelLabel {
        self.region_of(x).map_or(0, |k| k + 1)
    }

    pub fn model(&self, label: ModelLabel) -> &SparseModel {
        if label == 0 {
            &self.slow_model
        } else {
            &self.regions[label - 1].model
        }
    }

    /// Name of a label: `slow` or the region's label.
    pub fn label_name(&self, label: ModelLabel) -> &str {
        if label == 0 {
            "slow"
        } else {
            &self.regions[label - 1].bounds.label
        }
    }

    /// Distance by which `x` lies outside the training hull, relative to
    /// the hull diagonal.
    pub fn hull_excursion(&self, x: &[f64]) -> f64 {
        let diag = self
            .hull_lo
            .iter()
            .zip(&self.hull_hi)
            .map(|(l, h)| (h - l).powi(2))
            .sum::<f64>()
            .sqrt();
        let out = x
            .iter()
            .enumerate()
            .map(|(k, v)| (self.hull_lo[k] - v).max(v - self.hull_hi[k]).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt();
        if diag > 0.0 {
            out / diag
        } else {
            out
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&HybridModelDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<HybridModelDoc>(s)?.try_into()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct RegionDoc {
    label: String,
    scale: Scale,
    lo: Vec<f64>,
    hi: Vec<f64>,
    margin: Vec<f64>,
    model: SparseModelDoc,
}

#[derive(Serialize, Deserialize)]
struct HybridMetaDoc {
    state_dim: usize,
    hull_lo: Vec<f64>,
    hull_hi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HybridModelDoc {
    regions: Vec<RegionDoc>,
    slow_model: SparseModelDoc,
    metadata: HybridMetaDoc,
}

impl From<&HybridModel> for HybridModelDoc {
    fn from(h: &HybridModel) -> Self {
        Self {
            regions: h
                .regions
                .iter()
                .map(|r| RegionDoc {
                    label: r.bounds.label.clone(),
                    scale: r.scale,
                    lo: r.bounds.lo.clone(),
                    hi: r.bounds.hi.clone(),
                    margin: r.bounds.margin.clone(),
                    model: SparseModelDoc::from(&r.model),
                })
                .collect(),
            slow_model: SparseModelDoc::from(&h.slow_model),
            metadata: HybridMetaDoc {
                state_dim: h.state_dim,
                hull_lo: h.hull_lo.clone(),
                hull_hi: h.hull_hi.clone(),
            },
        }
    }
}

impl TryFrom<HybridModelDoc> for HybridModel {
    type Error = Error;
    fn try_from(doc: HybridModelDoc) -> Result<Self> {
        let regions = doc
            .regions
            .into_iter()
            .map(|r| {
                Ok(Region {
                    bounds: FastRegion {
                        lo: r.lo,
                        hi: r.hi,
                        label: r.label,
                        margin: r.margin,
                    },
                    scale: r.scale,
                    model: r.model.try_into()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HybridModel {
            regions,
            slow_model: doc.slow_model.try_into()?,
            state_dim: doc.metadata.state_dim,
            hull_lo: doc.metadata.hull_lo,
            hull_hi: doc.metadata.hull_hi,
        })
    }
}

/// A fitted hybrid model plus the bookkeeping that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridFit {
    pub model: HybridModel,
    pub segments: Vec<Segment>,
    /// Model label each training sample was assigned to.
    pub sample_labels: Vec<ModelLabel>,
}

fn fit_region(
    states: &DMatrix<f64>,
    xdot: &DMatrix<f64>,
    rows: &[usize],
    library: &LibrarySpec,
    lambda: f64,
    max_iter: usize,
    name: &str,
) -> Result<SparseModel> {
    let required = 2 * library.len();
    if rows.len() < required {
        return Err(Error::Underdetermined {
            region: name.to_string(),
            samples: rows.len(),
            required,
        });
    }
    let xs = states.select_rows(rows);
    let ds = xdot.select_rows(rows);
    let theta = build_library(&xs, library)?;
    let fit = stlsq(&theta, &ds, lambda, max_iter)?;
    SparseModel::from_fit(library.clone(), fit, rows.len())
}

/// Segments a trimmed trajectory, boxes its fast parts and fits one sparse
/// model per region plus a slow model.
pub fn fit_hybrid(traj: &Trajectory, trim: &TrimResult, options: &HybridOptions) -> Result<HybridFit> {
    let m = traj.len();
    let xdot = traj
        .derivatives()
        .ok_or_else(|| Error::invalid("hybrid fitting needs derivatives on the trajectory"))?;
    if let Some(h) = &options.holdout {
        if h.len() != m {
            return Err(Error::Dimension {
                context: "holdout mask length",
                expected: m,
                got: h.len(),
            });
        }
    }
    let states = traj.states();
    let segments = segment_trajectory(m, trim, options.min_run)?;
    let margin = default_margin(states, options.margin_fraction);
    let set = merge_fast_regions(states, &segments, &margin)?;
    let n_fast = set.regions.len();
    if options.fast_libraries.len() != 1 && options.fast_libraries.len() != n_fast {
        return Err(Error::invalid(format!(
            "{} fast libraries given for {n_fast} fast regions",
            options.fast_libraries.len()
        )));
    }

    let mut bounds: Vec<(FastRegion, Scale)> =
        set.regions.iter().cloned().map(|r| (r, Scale::Fast)).collect();
    let mut sample_labels = vec![0; m];
    match options.partition {
        Partition::FastBoxes => {
            for (i, label) in sample_labels.iter_mut().enumerate() {
                let x: Vec<f64> = states.row(i).iter().copied().collect();
                *label = set.regions.iter().position(|r| r.contains(&x)).map_or(0, |k| k + 1);
            }
        }
        Partition::PerSegment => {
            let mut region_of_segment = vec![None; segments.len()];
            for (k, members) in set.members.iter().enumerate() {
                for &s in members {
                    region_of_segment[s] = Some(k);
                }
            }
            let last_fast = region_of_segment.iter().rev().find_map(|r| *r);
            let mut current = last_fast;
            let mut slow_group = vec![None; segments.len()];
            for (s, seg) in segments.iter().enumerate() {
                match seg.scale {
                    Scale::Fast => current = region_of_segment[s],
                    Scale::Slow => slow_group[s] = current,
                }
            }
            for (s, seg) in segments.iter().enumerate() {
                let label = match (seg.scale, region_of_segment[s], slow_group[s]) {
                    (Scale::Fast, Some(k), _) => k + 1,
                    (Scale::Slow, _, Some(g)) => n_fast + g + 1,
                    _ => 0,
                };
                sample_labels[seg.start..seg.end].iter_mut().for_each(|l| *l = label);
            }
            if n_fast > 0 {
                for g in 0..n_fast {
                    let rows = (0..m).filter(|&i| sample_labels[i] == n_fast + g + 1);
                    let b = FastRegion::bounding(states, rows, &margin, format!("slow_{}", g + 1));
                    bounds.push((
                        b.unwrap_or(FastRegion {
                            lo: vec![f64::INFINITY; traj.dim()],
                            hi: vec![f64::NEG_INFINITY; traj.dim()],
                            label: format!("slow_{}", g + 1),
                            margin: margin.clone(),
                        }),
                        Scale::Slow,
                    ));
                }
            }
        }
    }

    let keep = |i: usize| options.holdout.as_ref().is_none_or(|h| !h[i]);
    let mut regions = Vec::with_capacity(bounds.len());
    for (k, (b, scale)) in bounds.into_iter().enumerate() {
        let rows: Vec<usize> = (0..m).filter(|&i| sample_labels[i] == k + 1 && keep(i)).collect();
        let (library, lambda) = match scale {
            Scale::Fast => (options.fast_library(k), options.fast_lambda),
            Scale::Slow => (&options.slow_library, options.slow_lambda),
        };
        if rows.is_empty() && scale == Scale::Slow {
            continue;
        }
        let model = fit_region(states, xdot, &rows, library, lambda, options.max_iter, &b.label)?;
        regions.push(Region {
            bounds: b,
            scale,
            model,
        });
    }
    let slow_rows: Vec<usize> = match options.partition {
        Partition::FastBoxes => (0..m).filter(|&i| sample_labels[i] == 0 && keep(i)).collect(),
        Partition::PerSegment => (0..m)
            .filter(|&i| (sample_labels[i] == 0 || sample_labels[i] > n_fast) && keep(i))
            .collect(),
    };
    let slow_model = fit_region(
        states,
        xdot,
        &slow_rows,
        &options.slow_library,
        options.slow_lambda,
        options.max_iter,
        "slow",
    )?;
    let hull = FastRegion::bounding(states, 0..m, &margin, String::new())
        .ok_or_else(|| Error::invalid("empty trajectory"))?;
    Ok(HybridFit {
        model: HybridModel {
            regions,
            slow_model,
            state_dim: traj.dim(),
            hull_lo: hull.lo,
            hull_hi: hull.hi,
        },
        segments,
        sample_labels,
    })
}

/// Output of [`simulate_hybrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct HybridSimulation {
    pub trajectory: Trajectory,
    /// Model in charge of the step leaving each sample.
    pub labels: Vec<ModelLabel>,
    /// Set when the state left the training hull by more than half its
    /// diagonal.
    pub extrapolated: bool,
}

/// Relative hull excursion that raises the extrapolation flag.
const EXTRAPOLATION_LIMIT: f64 = 0.5;

/// RK4 on the switched system; the model is chosen at the start of each
/// step and held for all four stages.
pub fn simulate_hybrid(model: &HybridModel, x0: &[f64], t0: f64, t1: f64, dt: f64) -> Result<HybridSimulation> {
    let d = model.state_dim;
    if x0.len() != d {
        return Err(Error::Dimension {
            context: "hybrid initial state",
            expected: d,
            got: x0.len(),
        });
    }
    let grid = TimeGrid::new(t0, t1, dt)?;
    let n = grid.steps + 1;
    let mut x = x0.to_vec();
    let mut states = Vec::with_capacity(n * d);
    let mut derivs = Vec::with_capacity(n * d);
    let mut times = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let max_p = model
        .regions
        .iter()
        .map(|r| r.model.library.len())
        .chain(std::iter::once(model.slow_model.library.len()))
        .max()
        .unwrap_or(0);
    let mut features = vec![0.0; max_p];
    let mut dx = vec![0.0; d];
    let mut rk = Rk4::new(d);
    let mut extrapolated = false;
    for k in 0..n {
        let label = model.dispatch(&x);
        let active = model.model(label);
        let p = active.library.len();
        active.eval_into(&x, &mut features[..p], &mut dx);
        extrapolated |= model.hull_excursion(&x) > EXTRAPOLATION_LIMIT;
        times.push(grid.time(k));
        states.extend_from_slice(&x);
        derivs.extend_from_slice(&dx);
        labels.push(label);
        if k + 1 < n {
            let mut f = |_: f64, s: &[f64], out: &mut [f64]| active.eval_into(s, &mut features[..p], out);
            rk.step(&mut f, grid.time(k), &mut x, grid.h);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Blowup {
                    last_valid_time: grid.time(k),
                });
            }
        }
    }
    let trajectory = Trajectory::with_default_labels(
        times,
        DMatrix::from_row_slice(n, d, &states),
        Some(DMatrix::from_row_slice(n, d, &derivs)),
    )?;
    Ok(HybridSimulation {
        trajectory,
        labels,
        extrapolated,
    })
}
