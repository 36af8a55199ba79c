use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adjacency::AdjacencyMatrix;
use super::oscillator::{Family, OscillatorKind};
use crate::error::{Error, Result};
use crate::ode::{self, TimeGrid};
use crate::trajectory::Trajectory;

/// Coupling strength `K` applied to each receiving node family.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Coupling {
    pub kuramoto: f64,
    pub rayleigh: f64,
    pub rossler: f64,
    pub fhn: f64,
}

impl Coupling {
    pub fn uniform(k: f64) -> Self {
        Self {
            kuramoto: k,
            rayleigh: k,
            rossler: k,
            fhn: k,
        }
    }

    pub fn of(&self, family: Family) -> f64 {
        match family {
            Family::Kuramoto => self.kuramoto,
            Family::Rayleigh => self.rayleigh,
            Family::Rossler => self.rossler,
            Family::Fhn => self.fhn,
        }
    }
}

/// How nodes of different families interact across an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossCouplingRule {
    /// A Kuramoto neighbour presents `sin θ` in place of each state
    /// component; a Kuramoto receiver treats a neighbour's first component as
    /// a phase, `sin(s − θ)`. Otherwise component `c` couples to the
    /// neighbour's component `c`, falling back to its first component.
    #[default]
    SinePhase,
    /// Edges between different families carry no coupling.
    Disabled,
}

/// A population of oscillators on a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    nodes: Vec<OscillatorKind>,
    adjacency: AdjacencyMatrix,
    coupling: Coupling,
    cross_coupling_rule: CrossCouplingRule,
    offsets: Vec<usize>,
    dim: usize,
}

impl NetworkSpec {
    pub fn new(
        nodes: Vec<OscillatorKind>,
        adjacency: AdjacencyMatrix,
        coupling: Coupling,
        cross_coupling_rule: CrossCouplingRule,
    ) -> Result<Self> {
        if adjacency.n() != nodes.len() {
            return Err(Error::Dimension {
                context: "adjacency size vs node count",
                expected: nodes.len(),
                got: adjacency.n(),
            });
        }
        for (i, node) in nodes.iter().enumerate() {
            node.validate()
                .map_err(|e| Error::invalid(format!("node {i}: {e}")))?;
        }
        for (name, k) in [
            ("kuramoto", coupling.kuramoto),
            ("rayleigh", coupling.rayleigh),
            ("rossler", coupling.rossler),
            ("fhn", coupling.fhn),
        ] {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::invalid(format!("coupling.{name} must be >= 0, got {k}")));
            }
        }
        let mut offsets = Vec::with_capacity(nodes.len());
        let mut dim = 0;
        for node in &nodes {
            offsets.push(dim);
            dim += node.width();
        }
        Ok(Self {
            nodes,
            adjacency,
            coupling,
            cross_coupling_rule,
            offsets,
            dim,
        })
    }

    /// Nodes with no edges.
    pub fn uncoupled(nodes: Vec<OscillatorKind>) -> Result<Self> {
        let n = nodes.len();
        Self::new(
            nodes,
            AdjacencyMatrix::empty(n),
            Coupling::default(),
            CrossCouplingRule::default(),
        )
    }

    pub fn nodes(&self) -> &[OscillatorKind] {
        &self.nodes
    }

    pub fn adjacency(&self) -> &AdjacencyMatrix {
        &self.adjacency
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn cross_coupling_rule(&self) -> CrossCouplingRule {
        self.cross_coupling_rule
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Total state dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Column of node `i`'s first component in the flat state.
    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// Column labels `n<i>.<component>`.
    pub fn labels(&self) -> Vec<String> {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(i, k)| k.components().iter().map(move |c| format!("n{i}.{c}")))
            .collect()
    }

    /// Columns holding component `c` of every node wide enough to have one,
    /// optionally restricted to one family.
    pub fn component_columns(&self, c: usize, family: Option<Family>) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, k)| c < k.width() && family.is_none_or(|f| k.family() == f))
            .map(|(i, _)| self.offsets[i] + c)
            .collect()
    }

    /// Columns holding Kuramoto phases.
    pub fn phase_columns(&self) -> Vec<usize> {
        self.component_columns(0, Some(Family::Kuramoto))
    }

    fn couples(&self, receiver: Family, sender: Family) -> bool {
        receiver == sender || self.cross_coupling_rule == CrossCouplingRule::SinePhase
    }

    /// Value node `i` presents on component channel `c` to a non-Kuramoto
    /// receiver.
    fn signal(&self, x: &[f64], sin_phase: &[f64], i: usize, c: usize) -> f64 {
        let node = &self.nodes[i];
        match node.family() {
            Family::Kuramoto => sin_phase[i],
            _ => {
                let c = if c < node.width() { c } else { 0 };
                x[self.offsets[i] + c]
            }
        }
    }
}

/// Evaluates the network vector field at `state`.
pub fn network_rhs(spec: &NetworkSpec, state: &[f64], t: f64) -> Result<Vec<f64>> {
    if state.len() != spec.dim() {
        return Err(Error::Dimension {
            context: "network state",
            expected: spec.dim(),
            got: state.len(),
        });
    }
    let mut out = vec![0.0; spec.dim()];
    let mut scratch = RhsScratch::new(spec.n());
    rhs_into(spec, &mut scratch, t, state, &mut out);
    Ok(out)
}

/// Per-node sines and cosines of each node's phase-like first component.
struct RhsScratch {
    sin_phase: Vec<f64>,
    cos_phase: Vec<f64>,
}

impl RhsScratch {
    fn new(n: usize) -> Self {
        Self {
            sin_phase: vec![0.0; n],
            cos_phase: vec![0.0; n],
        }
    }
}

fn rhs_into(spec: &NetworkSpec, scratch: &mut RhsScratch, _t: f64, x: &[f64], out: &mut [f64]) {
    let n = spec.n();
    let inv_n = 1.0 / n as f64;
    for i in 0..n {
        let (s, c) = x[spec.offsets[i]].sin_cos();
        scratch.sin_phase[i] = s;
        scratch.cos_phase[i] = c;
    }
    for (j, node) in spec.nodes.iter().enumerate() {
        let o = spec.offsets[j];
        let w = node.width();
        node.local_rhs(&x[o..o + w], &mut out[o..o + w]);
        let family = node.family();
        let k = spec.coupling.of(family) * inv_n;
        if k == 0.0 {
            continue;
        }
        let neighbors = spec
            .adjacency
            .neighbors(j)
            .iter()
            .copied()
            .filter(|&i| spec.couples(family, spec.nodes[i].family()));
        match *node {
            OscillatorKind::Kuramoto { .. } => {
                // Σ sin(s_i − θ_j) = cos θ_j Σ sin s_i − sin θ_j Σ cos s_i
                let (mut ss, mut sc) = (0.0, 0.0);
                for i in neighbors {
                    ss += scratch.sin_phase[i];
                    sc += scratch.cos_phase[i];
                }
                out[o] += k * (scratch.cos_phase[j] * ss - scratch.sin_phase[j] * sc);
            }
            OscillatorKind::Rayleigh { epsilon } => {
                let (xj, yj) = (x[o], x[o + 1]);
                let mut acc = 0.0;
                for i in neighbors {
                    let xi = spec.signal(x, &scratch.sin_phase, i, 0);
                    let yi = spec.signal(x, &scratch.sin_phase, i, 1);
                    let dx = xj - xi;
                    acc += (1.0 + dx * dx) * (yi - yj);
                }
                out[o + 1] += k * acc / epsilon;
            }
            OscillatorKind::Rossler { .. } => {
                let mut acc = [0.0; 3];
                for i in neighbors {
                    for (c, a) in acc.iter_mut().enumerate() {
                        *a += (x[o + c] - spec.signal(x, &scratch.sin_phase, i, c)).sin();
                    }
                }
                for c in 0..3 {
                    out[o + c] += k * acc[c];
                }
            }
            OscillatorKind::Fhn { .. } => {
                let mut acc = [0.0; 2];
                let mut deg = 0.0;
                for i in neighbors {
                    deg += 1.0;
                    acc[0] += spec.signal(x, &scratch.sin_phase, i, 0);
                    acc[1] += spec.signal(x, &scratch.sin_phase, i, 1);
                }
                out[o] += k * (deg * x[o] - acc[0]);
                out[o + 1] += k * (deg * x[o + 1] - acc[1]);
            }
        }
    }
}

/// Integrates the network with RK4, recording every step.
pub fn simulate(spec: &NetworkSpec, x0: &[f64], t0: f64, t1: f64, dt: f64) -> Result<Trajectory> {
    simulate_every(spec, x0, t0, t1, dt, 1)
}

/// Like [`simulate`] but records only every `record_every`-th step.
pub fn simulate_every(
    spec: &NetworkSpec,
    x0: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
    record_every: usize,
) -> Result<Trajectory> {
    if x0.len() != spec.dim() {
        return Err(Error::Dimension {
            context: "initial state",
            expected: spec.dim(),
            got: x0.len(),
        });
    }
    let grid = TimeGrid::new(t0, t1, dt)?;
    let mut scratch = RhsScratch::new(spec.n());
    let traj = ode::integrate(
        |t, x, out| rhs_into(spec, &mut scratch, t, x, out),
        x0,
        &grid,
        record_every,
    )?;
    traj.with_labels(spec.labels())
}

/// Initial state with Kuramoto phases `U(0, 2π)` and all other components
/// `U(−1, 1)`.
pub fn random_initial_state(spec: &NetworkSpec, rng: &mut impl Rng) -> Vec<f64> {
    let mut x = Vec::with_capacity(spec.dim());
    for node in spec.nodes() {
        for _ in 0..node.width() {
            x.push(match node.family() {
                Family::Kuramoto => rng.random_range(0.0..std::f64::consts::TAU),
                _ => rng.random_range(-1.0..1.0),
            });
        }
    }
    x
}

/// Replaces Kuramoto phase columns by `cos θ` (derivative `−sin θ · θ̇`),
/// giving bounded observables for SVD. Other columns pass through.
pub fn observables(spec: &NetworkSpec, traj: &Trajectory) -> Result<Trajectory> {
    if traj.dim() != spec.dim() {
        return Err(Error::Dimension {
            context: "trajectory width vs network",
            expected: spec.dim(),
            got: traj.dim(),
        });
    }
    let phases = spec.phase_columns();
    let mut states = traj.states().clone();
    let mut derivs = traj.derivatives().cloned();
    let mut labels = traj.labels().to_vec();
    for &c in &phases {
        for r in 0..states.nrows() {
            let theta = traj.states()[(r, c)];
            let (s, co) = theta.sin_cos();
            states[(r, c)] = co;
            if let Some(d) = derivs.as_mut() {
                d[(r, c)] *= -s;
            }
        }
        labels[c] = labels[c].replace("theta", "cos_theta");
    }
    Trajectory::new(traj.times().to_vec(), states, derivs, labels)
}

/// Selects the given columns as an `m × k` matrix.
pub fn columns(traj: &Trajectory, cols: &[usize]) -> DMatrix<f64> {
    traj.states().select_columns(cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::build_er_adjacency;
    use std::f64::consts::PI;

    fn single(kind: OscillatorKind) -> NetworkSpec {
        NetworkSpec::uncoupled(vec![kind]).unwrap()
    }

    #[test]
    fn uncoupled_kuramoto_advances_at_omega() {
        let spec = single(OscillatorKind::Kuramoto { omega: 0.6 });
        for theta in [0.0, 1.0, -3.0] {
            assert_eq!(network_rhs(&spec, &[theta], 0.0).unwrap(), vec![0.6]);
        }
    }

    #[test]
    fn rossler_at_origin() {
        let spec = single(OscillatorKind::rossler_default());
        assert_eq!(network_rhs(&spec, &[0.0; 3], 0.0).unwrap(), vec![0.0, 0.0, 0.2]);
    }

    #[test]
    fn fhn_origin_is_equilibrium() {
        let spec = single(OscillatorKind::fhn_default(0.0));
        assert_eq!(network_rhs(&spec, &[0.0, 0.0], 0.0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn wrong_state_length_is_rejected() {
        let spec = single(OscillatorKind::rossler_default());
        assert!(matches!(network_rhs(&spec, &[0.0; 2], 0.0), Err(Error::Dimension { .. })));
    }

    #[test]
    fn kuramoto_pair_matches_direct_sum() {
        let nodes = vec![
            OscillatorKind::Kuramoto { omega: 0.5 },
            OscillatorKind::Kuramoto { omega: 0.7 },
        ];
        let spec = NetworkSpec::new(
            nodes,
            AdjacencyMatrix::complete(2),
            Coupling::uniform(3.0),
            CrossCouplingRule::SinePhase,
        )
        .unwrap();
        let th = [0.3, 1.9];
        let d = network_rhs(&spec, &th, 0.0).unwrap();
        assert!((d[0] - (0.5 + 1.5 * (th[1] - th[0]).sin())).abs() < 1e-14);
        assert!((d[1] - (0.7 + 1.5 * (th[0] - th[1]).sin())).abs() < 1e-14);
    }

    #[test]
    fn rayleigh_hkb_term() {
        let spec = NetworkSpec::new(
            vec![OscillatorKind::Rayleigh { epsilon: 0.5 }; 2],
            AdjacencyMatrix::complete(2),
            Coupling::uniform(2.0),
            CrossCouplingRule::SinePhase,
        )
        .unwrap();
        let s = [0.2, 0.4, -0.3, 1.0];
        let d = network_rhs(&spec, &s, 0.0).unwrap();
        let local = 0.4 - 0.4f64.powi(3) / 3.0 - 0.2;
        let coup = 1.0 * (1.0 + 0.5f64.powi(2)) * (1.0 - 0.4);
        assert!((d[1] - (local + coup) / 0.5).abs() < 1e-13);
        assert_eq!(d[0], 0.4);
    }

    #[test]
    fn fhn_sees_sine_of_kuramoto_neighbor() {
        let spec = NetworkSpec::new(
            vec![OscillatorKind::Kuramoto { omega: 0.0 }, OscillatorKind::fhn_default(0.0)],
            AdjacencyMatrix::complete(2),
            Coupling {
                kuramoto: 0.0,
                fhn: 2.0,
                ..Default::default()
            },
            CrossCouplingRule::SinePhase,
        )
        .unwrap();
        let s = [0.7, 0.0, 0.0];
        let d = network_rhs(&spec, &s, 0.0).unwrap();
        assert!((d[1] + 0.7f64.sin()).abs() < 1e-14);
        assert!((d[2] + 0.7f64.sin()).abs() < 1e-14);

        let off = NetworkSpec::new(
            spec.nodes().to_vec(),
            AdjacencyMatrix::complete(2),
            *spec.coupling(),
            CrossCouplingRule::Disabled,
        )
        .unwrap();
        assert_eq!(network_rhs(&off, &s, 0.0).unwrap()[1], 0.0);
    }

    #[test]
    fn kuramoto_sees_first_component_as_phase() {
        let spec = NetworkSpec::new(
            vec![OscillatorKind::Kuramoto { omega: 0.0 }, OscillatorKind::fhn_default(0.0)],
            AdjacencyMatrix::complete(2),
            Coupling {
                kuramoto: 4.0,
                ..Default::default()
            },
            CrossCouplingRule::SinePhase,
        )
        .unwrap();
        let s = [0.1, 0.9, 0.0];
        let d = network_rhs(&spec, &s, 0.0).unwrap();
        assert!((d[0] - 2.0 * (0.9f64 - 0.1).sin()).abs() < 1e-14);
    }

    #[test]
    fn single_kuramoto_full_turn() {
        let spec = single(OscillatorKind::Kuramoto { omega: 1.0 });
        let tr = simulate(&spec, &[0.0], 0.0, 2.0 * PI, 1e-3).unwrap();
        let last = tr.states()[(tr.len() - 1, 0)];
        assert!((last - 2.0 * PI).abs() < 1e-8);
        assert_eq!(tr.labels(), &["n0.theta".to_string()]);
    }

    #[test]
    fn observables_map_phase_to_cosine() {
        let spec = single(OscillatorKind::Kuramoto { omega: 2.0 });
        let tr = simulate(&spec, &[0.0], 0.0, 1.0, 0.1).unwrap();
        let obs = observables(&spec, &tr).unwrap();
        for r in 0..obs.len() {
            let t = obs.times()[r];
            assert!((obs.states()[(r, 0)] - (2.0 * t).cos()).abs() < 1e-9);
            assert!((obs.derivatives().unwrap()[(r, 0)] + 2.0 * (2.0 * t).sin()).abs() < 1e-9);
        }
        assert_eq!(obs.labels()[0], "n0.cos_theta");
    }

    #[test]
    fn component_columns_follow_offsets() {
        let spec = NetworkSpec::new(
            vec![
                OscillatorKind::Kuramoto { omega: 0.6 },
                OscillatorKind::fhn_default(0.0),
                OscillatorKind::fhn_default(0.0),
            ],
            build_er_adjacency(3, 0.5, 1),
            Coupling::default(),
            CrossCouplingRule::SinePhase,
        )
        .unwrap();
        assert_eq!(spec.dim(), 5);
        assert_eq!(spec.component_columns(0, Some(Family::Fhn)), vec![1, 3]);
        assert_eq!(spec.component_columns(1, None), vec![2, 4]);
        assert_eq!(spec.phase_columns(), vec![0]);
    }
}
