//! Classical fixed-step fourth-order Runge–Kutta.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Uniform grid `t0 + k·h`, `k = 0..=steps`, ending exactly at `t1`.
///
/// The requested `dt` is shrunk to the nearest step that divides `t1 − t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub h: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::invalid(format!("need t1 > t0, got [{t0}, {t1}]")));
        }
        let span = t1 - t0;
        let steps = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok(Self {
            t0,
            h: span / steps as f64,
            steps,
        })
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }

    pub fn t1(&self) -> f64 {
        self.time(self.steps)
    }
}

/// Scratch buffers for one RK4 step of a `dim`-dimensional system.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }

    /// Advances `x` from `t` to `t + h` in place.
    pub fn step<F>(&mut self, f: &mut F, t: f64, x: &mut [f64], h: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let half = 0.5 * h;
        f(t, x, &mut self.k1);
        for i in 0..x.len() {
            self.stage[i] = x[i] + half * self.k1[i];
        }
        f(t + half, &self.stage, &mut self.k2);
        for i in 0..x.len() {
            self.stage[i] = x[i] + half * self.k2[i];
        }
        f(t + half, &self.stage, &mut self.k3);
        for i in 0..x.len() {
            self.stage[i] = x[i] + h * self.k3[i];
        }
        f(t + h, &self.stage, &mut self.k4);
        let sixth = h / 6.0;
        for i in 0..x.len() {
            x[i] += sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

/// Integrates `ẋ = f(t, x)` and records every `record_every`-th grid point.
///
/// Recorded rows carry exact derivatives `f(t_k, x_k)`.
pub fn integrate<F>(
    mut f: F,
    x0: &[f64],
    grid: &TimeGrid,
    record_every: usize,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let every = record_every.max(1);
    let d = x0.len();
    if let Some(row) = x0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row });
    }
    let n_rec = grid.steps / every + 1;
    let mut times = Vec::with_capacity(n_rec);
    let mut states = Vec::with_capacity(n_rec * d);
    let mut derivs = Vec::with_capacity(n_rec * d);
    let mut x = x0.to_vec();
    let mut dx = vec![0.0; d];
    let mut rk = Rk4::new(d);
    for k in 0..=grid.steps {
        let t = grid.time(k);
        if k > 0 {
            rk.step(&mut f, grid.time(k - 1), &mut x, grid.h);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Blowup {
                    last_valid_time: grid.time(k - 1),
                });
            }
        }
        if k % every == 0 {
            f(t, &x, &mut dx);
            times.push(t);
            states.extend_from_slice(&x);
            derivs.extend_from_slice(&dx);
        }
    }
    let m = times.len();
    Trajectory::with_default_labels(
        times,
        DMatrix::from_row_slice(m, d, &states),
        Some(DMatrix::from_row_slice(m, d, &derivs)),
    )
}
