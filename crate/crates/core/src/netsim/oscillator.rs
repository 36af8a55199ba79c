use rand::Rng;
use serde::{Deserialize, Serialize};

/// Node family, used to look up coupling strengths and cross-kind rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Kuramoto,
    Rayleigh,
    Rossler,
    Fhn,
}

/// Dynamics and parameters of a single network node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OscillatorKind {
    /// Phase oscillator `θ̇ = ω + coupling`.
    Kuramoto { omega: f64 },
    /// `εẍ = ẋ − ẋ³/3 − x + coupling`, state `(x, ẋ)`.
    Rayleigh { epsilon: f64 },
    Rossler { a: f64, b: f64, c: f64 },
    /// `v̇ = α₃v³ + α₂v² + α₁v − w + I + coupling`, `ẇ = c v − b w + coupling`.
    ///
    /// `stimulus` is the constant injected current `I`.
    Fhn {
        alpha1: f64,
        alpha2: f64,
        alpha3: f64,
        c_gain: f64,
        b_decay: f64,
        #[serde(default)]
        stimulus: f64,
    },
}

impl OscillatorKind {
    pub fn family(&self) -> Family {
        match self {
            Self::Kuramoto { .. } => Family::Kuramoto,
            Self::Rayleigh { .. } => Family::Rayleigh,
            Self::Rossler { .. } => Family::Rossler,
            Self::Fhn { .. } => Family::Fhn,
        }
    }

    pub fn width(&self) -> usize {
        self.components().len()
    }

    pub fn components(&self) -> &'static [&'static str] {
        match self {
            Self::Kuramoto { .. } => &["theta"],
            Self::Rayleigh { .. } => &["x", "xdot"],
            Self::Rossler { .. } => &["x", "y", "z"],
            Self::Fhn { .. } => &["v", "w"],
        }
    }

    /// FHN node with the classic spiking parameter set `α = (−0.1, 1.1, −1)`,
    /// `c = b = 0.1`.
    pub fn fhn_default(stimulus: f64) -> Self {
        Self::Fhn {
            alpha1: -0.1,
            alpha2: 1.1,
            alpha3: -1.0,
            c_gain: 0.1,
            b_decay: 0.1,
            stimulus,
        }
    }

    pub fn rossler_default() -> Self {
        Self::Rossler {
            a: 0.2,
            b: 0.2,
            c: 5.7,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        let finite = |v: f64| v.is_finite();
        let ok = match *self {
            Self::Kuramoto { omega } => finite(omega),
            Self::Rayleigh { epsilon } => {
                if !(epsilon > 0.0 && epsilon <= 1.0) {
                    return Err(format!("Rayleigh epsilon must lie in (0, 1], got {epsilon}"));
                }
                true
            }
            Self::Rossler { a, b, c } => [a, b, c].into_iter().all(finite),
            Self::Fhn {
                alpha1,
                alpha2,
                alpha3,
                c_gain,
                b_decay,
                stimulus,
            } => [alpha1, alpha2, alpha3, c_gain, b_decay, stimulus]
                .into_iter()
                .all(finite),
        };
        if ok {
            Ok(())
        } else {
            Err(format!("non-finite parameter in {self:?}"))
        }
    }

    /// Uncoupled vector field of this node.
    pub fn local_rhs(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            Self::Kuramoto { omega } => out[0] = omega,
            Self::Rayleigh { epsilon } => {
                out[0] = x[1];
                out[1] = (x[1] - x[1].powi(3) / 3.0 - x[0]) / epsilon;
            }
            Self::Rossler { a, b, c } => {
                out[0] = -x[1] - x[2];
                out[1] = x[0] + a * x[1];
                out[2] = b + x[2] * (x[0] - c);
            }
            Self::Fhn {
                alpha1,
                alpha2,
                alpha3,
                c_gain,
                b_decay,
                stimulus,
            } => {
                let v = x[0];
                out[0] = ((alpha3 * v + alpha2) * v + alpha1) * v - x[1] + stimulus;
                out[1] = c_gain * v - b_decay * x[1];
            }
        }
    }
}

/// Draws a Kuramoto node with `ω ~ U[mean − half_width, mean + half_width]`.
pub fn sample_kuramoto(rng: &mut impl Rng, mean: f64, half_width: f64) -> OscillatorKind {
    let omega = if half_width > 0.0 {
        rng.random_range(mean - half_width..=mean + half_width)
    } else {
        mean
    };
    OscillatorKind::Kuramoto { omega }
}

/// Draws a Rayleigh node with `ε ~ U[lo, hi]`.
pub fn sample_rayleigh(rng: &mut impl Rng, lo: f64, hi: f64) -> OscillatorKind {
    let epsilon = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    OscillatorKind::Rayleigh { epsilon }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths() {
        assert_eq!(OscillatorKind::Kuramoto { omega: 1.0 }.width(), 1);
        assert_eq!(OscillatorKind::Rayleigh { epsilon: 0.1 }.width(), 2);
        assert_eq!(OscillatorKind::rossler_default().width(), 3);
        assert_eq!(OscillatorKind::fhn_default(0.0).width(), 2);
    }

    #[test]
    fn rayleigh_epsilon_must_be_positive() {
        assert!(OscillatorKind::Rayleigh { epsilon: 0.0 }.validate().is_err());
        assert!(OscillatorKind::Rayleigh { epsilon: 1.5 }.validate().is_err());
        assert!(OscillatorKind::Rayleigh { epsilon: 1.0 }.validate().is_ok());
    }

    #[test]
    fn serde_round_trip() {
        let k = OscillatorKind::fhn_default(0.2);
        let s = serde_json::to_string(&k).unwrap();
        assert!(s.contains("\"kind\":\"fhn\""));
        let back: OscillatorKind = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
    }
}
