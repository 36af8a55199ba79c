//! Random networks of coupled oscillators and their RK4 integration.

mod adjacency;
mod canonical;
mod network;
mod oscillator;

pub use adjacency::{build_er_adjacency, AdjacencyMatrix};
pub use canonical::{canonical_oscillator, CanonicalOscillator};
pub use network::{
    columns, network_rhs, observables, random_initial_state, simulate, simulate_every, Coupling,
    CrossCouplingRule, NetworkSpec,
};
pub use oscillator::{sample_kuramoto, sample_rayleigh, Family, OscillatorKind};
