//! Model discovery for networks of coupled nonlinear oscillators.
//!
//! The crate is organised as a pipeline over [`Trajectory`] values:
//!
//! * [`netsim`] builds Erdős–Rényi networks of Kuramoto, Rayleigh, Rössler and
//!   FitzHugh–Nagumo nodes and integrates them with fixed-step RK4.
//! * [`reduction`] projects trajectories onto leading SVD modes, optionally
//!   block by block, and estimates the number of modes needed to reach a
//!   Frobenius-norm accuracy.
//! * [`sindy`] builds candidate-function libraries and solves sparse
//!   regressions with sequentially thresholded least squares, including the
//!   trimmed variant that flags hard-to-fit samples.
//! * [`hybrid`] turns trimmed samples into phase-space regions, fits one
//!   sparse model per region and simulates the switched system.
//! * [`analysis`] holds the trajectory metrics shared by tests and
//!   experiments (periods, Hausdorff distance, order parameter, R²).

pub mod analysis;
pub mod error;
pub mod hybrid;
pub mod linalg;
pub mod netsim;
pub mod ode;
pub mod reduction;
pub mod seed;
pub mod sindy;
pub mod trajectory;

pub use error::{Error, Result};
pub use trajectory::Trajectory;
