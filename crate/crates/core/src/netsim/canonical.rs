use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, TimeGrid};
use crate::trajectory::Trajectory;

/// Single relaxation oscillators used to exercise the hybrid pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CanonicalOscillator {
    /// Liénard form `ẋ = μ(x − x³/3 − y)`, `ẏ = x/μ`.
    VanDerPol { mu: f64 },
    /// `εẍ = ẋ − ẋ³/3 − x` with state `(x, y = ẋ)`.
    Rayleigh { epsilon: f64 },
}

impl CanonicalOscillator {
    pub fn labels(&self) -> Vec<String> {
        let names: [&str; 2] = match self {
            Self::VanDerPol { .. } => ["x", "y"],
            Self::Rayleigh { .. } => ["x", "y"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    pub fn rhs(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            Self::VanDerPol { mu } => {
                out[0] = mu * (x[0] - x[0].powi(3) / 3.0 - x[1]);
                out[1] = x[0] / mu;
            }
            Self::Rayleigh { epsilon } => {
                out[0] = x[1];
                out[1] = (x[1] - x[1].powi(3) / 3.0 - x[0]) / epsilon;
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            Self::VanDerPol { mu } => ("mu", mu),
            Self::Rayleigh { epsilon } => ("epsilon", epsilon),
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("{name} must be positive, got {v}")))
        }
    }
}

/// Integrates a canonical oscillator with RK4, recording every step.
pub fn canonical_oscillator(
    kind: CanonicalOscillator,
    x0: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory> {
    kind.validate()?;
    if x0.len() != 2 {
        return Err(Error::Dimension {
            context: "canonical oscillator initial state",
            expected: 2,
            got: x0.len(),
        });
    }
    let grid = TimeGrid::new(t0, t1, dt)?;
    ode::integrate(|_, x, out| kind.rhs(x, out), x0, &grid, 1)?.with_labels(kind.labels())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Euclidean distance from `(x, y)` to the curve `y = s − s³/3`.
    fn distance_to_cubic(x: f64, y: f64) -> f64 {
        (-5000..=5000)
            .map(|k| x + k as f64 * 1e-4)
            .map(|s| (x - s).hypot(y - (s - s.powi(3) / 3.0)))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn vdp_slow_branches_hug_the_cubic() {
        let tr = canonical_oscillator(CanonicalOscillator::VanDerPol { mu: 5.0 }, &[2.0, 0.0], 0.0, 60.0, 1e-3)
            .unwrap()
            .after(30.0);
        let d = tr.derivatives().unwrap();
        let mut checked = 0;
        for r in (0..tr.len()).step_by(10) {
            let (x, y) = (tr.states()[(r, 0)], tr.states()[(r, 1)]);
            // Jumps cross the same x band at speed O(μ); slow drift is O(1/μ).
            if (1.1..=2.0).contains(&x.abs()) && d[(r, 0)].abs() < 1.0 {
                assert!(distance_to_cubic(x, y) < 0.1, "x={x}, y={y}");
                checked += 1;
            }
        }
        assert!(checked > 500);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(canonical_oscillator(CanonicalOscillator::Rayleigh { epsilon: 0.0 }, &[0.0, 0.0], 0.0, 1.0, 0.1).is_err());
        assert!(canonical_oscillator(CanonicalOscillator::VanDerPol { mu: 1.0 }, &[0.0], 0.0, 1.0, 0.1).is_err());
    }
}
