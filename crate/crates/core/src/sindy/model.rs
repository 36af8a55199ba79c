use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::library::{build_library, LibrarySpec};
use super::stlsq::{self, StlsqFit, TrimResult};
use crate::error::{Error, Result};
use crate::ode::{self, TimeGrid};
use crate::trajectory::{fmt_f64, Trajectory};

/// Diagnostics carried alongside fitted coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub ill_conditioned: bool,
    pub condition: f64,
    pub iterations: usize,
    pub samples: usize,
}

/// `ẋ = Θ(x) Ξ` for a fixed library.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseModel {
    /// `p × d`; row `k` holds the coefficients of library term `k`.
    pub xi: DMatrix<f64>,
    pub library: LibrarySpec,
    pub threshold_used: f64,
    pub metadata: ModelMetadata,
}

impl SparseModel {
    pub fn new(library: LibrarySpec, xi: DMatrix<f64>, threshold_used: f64) -> Result<Self> {
        if xi.nrows() != library.len() {
            return Err(Error::Dimension {
                context: "coefficient rows vs library terms",
                expected: library.len(),
                got: xi.nrows(),
            });
        }
        Ok(Self {
            xi,
            library,
            threshold_used,
            metadata: ModelMetadata::default(),
        })
    }

    pub fn from_fit(library: LibrarySpec, fit: StlsqFit, samples: usize) -> Result<Self> {
        let mut model = Self::new(library, fit.xi, fit.lambda)?;
        model.metadata = ModelMetadata {
            ill_conditioned: fit.ill_conditioned,
            condition: fit.condition,
            iterations: fit.iterations,
            samples,
        };
        Ok(model)
    }

    /// Output dimension.
    pub fn dim(&self) -> usize {
        self.xi.ncols()
    }

    pub fn active_count(&self) -> usize {
        self.xi.iter().filter(|v| **v != 0.0).count()
    }

    /// Non-zero coefficients in output column `k`.
    pub fn active_in(&self, k: usize) -> usize {
        self.xi.column(k).iter().filter(|v| **v != 0.0).count()
    }

    /// Coefficient of the term named `term` in equation `k`, if present.
    pub fn coefficient(&self, term: &str, k: usize) -> Option<f64> {
        self.library
            .term_names()
            .iter()
            .position(|n| n == term)
            .map(|i| self.xi[(i, k)])
    }

    /// Evaluates `Θ(x) Ξ` into `out`, reusing `features` as scratch.
    pub fn eval_into(&self, x: &[f64], features: &mut [f64], out: &mut [f64]) {
        self.library.eval_row(x, features);
        for (k, o) in out.iter_mut().enumerate() {
            *o = features
                .iter()
                .enumerate()
                .map(|(i, f)| f * self.xi[(i, k)])
                .sum();
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut features = vec![0.0; self.library.len()];
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut features, &mut out);
        out
    }

    /// Predicted derivatives at every row of `states`.
    pub fn predict(&self, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(build_library(states, &self.library)? * &self.xi)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SparseModelDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<SparseModelDoc>(s)?.try_into()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// JSON form: coefficients as 17-significant-digit decimal strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseModelDoc {
    pub library: LibrarySpec,
    pub terms: Vec<String>,
    pub xi: Vec<Vec<String>>,
    pub lambda: f64,
    pub active_count: usize,
    #[serde(default)]
    pub metadata: ModelMetadata,
}

impl From<&SparseModel> for SparseModelDoc {
    fn from(m: &SparseModel) -> Self {
        Self {
            library: m.library.clone(),
            terms: m.library.term_names(),
            xi: m
                .xi
                .row_iter()
                .map(|r| r.iter().map(|v| fmt_f64(*v)).collect())
                .collect(),
            lambda: m.threshold_used,
            active_count: m.active_count(),
            metadata: m.metadata.clone(),
        }
    }
}

impl TryFrom<SparseModelDoc> for SparseModel {
    type Error = Error;
    fn try_from(doc: SparseModelDoc) -> Result<Self> {
        let p = doc.xi.len();
        let d = doc.xi.first().map_or(0, Vec::len);
        if doc.xi.iter().any(|r| r.len() != d) {
            return Err(Error::Format("ragged coefficient matrix".into()));
        }
        let mut xi = DMatrix::zeros(p, d);
        for (i, row) in doc.xi.iter().enumerate() {
            for (k, s) in row.iter().enumerate() {
                xi[(i, k)] = s
                    .parse()
                    .map_err(|e| Error::Format(format!("coefficient ({i}, {k}): {e}")))?;
            }
        }
        let mut model = SparseModel::new(doc.library, xi, doc.lambda)?;
        model.metadata = doc.metadata;
        Ok(model)
    }
}

/// Builds the library on `states` and runs STLSQ against `xdot`.
pub fn fit_sparse(
    states: &DMatrix<f64>,
    xdot: &DMatrix<f64>,
    library: &LibrarySpec,
    lambda: f64,
    max_iter: usize,
) -> Result<SparseModel> {
    let theta = build_library(states, library)?;
    let fit = stlsq::stlsq(&theta, xdot, lambda, max_iter)?;
    SparseModel::from_fit(library.clone(), fit, states.nrows())
}

/// Trimmed counterpart of [`fit_sparse`].
pub fn fit_sparse_trimmed(
    states: &DMatrix<f64>,
    xdot: &DMatrix<f64>,
    library: &LibrarySpec,
    lambda: f64,
    trim_fraction: f64,
    max_iter: usize,
    max_outer_iter: usize,
) -> Result<(SparseModel, TrimResult)> {
    let theta = build_library(states, library)?;
    let (fit, trim) =
        stlsq::stlsq_trimmed(&theta, xdot, lambda, trim_fraction, max_iter, max_outer_iter)?;
    Ok((SparseModel::from_fit(library.clone(), fit, trim.h)?, trim))
}

/// Integrates `ẋ = Θ(x) Ξ` with RK4.
pub fn simulate_model(model: &SparseModel, x0: &[f64], t0: f64, t1: f64, dt: f64) -> Result<Trajectory> {
    if x0.len() != model.dim() || model.dim() != model.library.var_count() {
        return Err(Error::Dimension {
            context: "model state dimension",
            expected: model.dim(),
            got: x0.len(),
        });
    }
    let grid = TimeGrid::new(t0, t1, dt)?;
    let mut features = vec![0.0; model.library.len()];
    ode::integrate(|_, x, out| model.eval_into(x, &mut features, out), x0, &grid, 1)
}

/// Rounds to four significant figures.
pub fn fmt_sig4(c: f64) -> String {
    if c == 0.0 || !c.is_finite() {
        return format!("{c:.3}");
    }
    let mut e = c.abs().log10().floor() as i32;
    let scaled = (c.abs() / 10f64.powi(e - 3)).round();
    if scaled >= 1e4 {
        e += 1;
    }
    if (-3..4).contains(&e) {
        let decimals = (3 - e).max(0) as usize;
        format!("{:.*}", decimals, c.abs())
    } else {
        format!("{:.3e}", c.abs())
    }
}

/// One line per equation, terms ordered by decreasing `|ξ|`.
pub fn model_to_text(model: &SparseModel) -> Vec<String> {
    model_to_text_named(model, &model.library.default_names())
}

/// Like [`model_to_text`] with custom variable names.
pub fn model_to_text_named(model: &SparseModel, names: &[String]) -> Vec<String> {
    let terms: Vec<String> = model.library.terms().iter().map(|t| t.name(names)).collect();
    (0..model.dim())
        .map(|k| {
            let mut active: Vec<(f64, &str)> = (0..terms.len())
                .filter(|&i| model.xi[(i, k)] != 0.0)
                .map(|i| (model.xi[(i, k)], terms[i].as_str()))
                .collect();
            active.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()).then(a.1.cmp(b.1)));
            let lhs = format!("d{}/dt = ", names[k]);
            if active.is_empty() {
                return format!("{lhs}0");
            }
            let mut line = lhs;
            for (n, (c, name)) in active.iter().enumerate() {
                let sign = if *c < 0.0 { "-" } else { "+" };
                if n == 0 {
                    if *c < 0.0 {
                        line.push('-');
                    }
                } else {
                    line.push_str(&format!(" {sign} "));
                }
                line.push_str(&fmt_sig4(*c));
                if *name != "1" {
                    line.push(' ');
                    line.push_str(name);
                }
            }
            line
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sindy::Term;

    fn harmonic() -> SparseModel {
        let lib = LibrarySpec::polynomial(2, 1);
        let xi = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, -1.0, 1.0, 0.0]);
        SparseModel::new(lib, xi, 0.1).unwrap()
    }

    #[test]
    fn harmonic_oscillator_returns_after_one_period() {
        let tr = simulate_model(&harmonic(), &[1.0, 0.0], 0.0, std::f64::consts::TAU, 1e-3).unwrap();
        let last = tr.state(tr.len() - 1);
        assert!((last[0] - 1.0).abs() < 1e-6 && last[1].abs() < 1e-6);
    }

    #[test]
    fn text_format() {
        let lib = LibrarySpec::polynomial(1, 1);
        let m = SparseModel::new(lib.clone(), DMatrix::from_row_slice(2, 1, &[0.0, -2.0]), 0.1).unwrap();
        assert_eq!(model_to_text(&m), vec!["dx0/dt = -2.000 x0"]);
        let z = SparseModel::new(lib, DMatrix::zeros(2, 1), 0.1).unwrap();
        assert_eq!(model_to_text(&z), vec!["dx0/dt = 0"]);
    }

    #[test]
    fn text_order_ignores_library_order() {
        let a = LibrarySpec::new(2, vec![Term::Monomial { exponents: vec![1, 0] }, Term::Monomial { exponents: vec![0, 1] }]).unwrap();
        let b = LibrarySpec::new(2, vec![Term::Monomial { exponents: vec![0, 1] }, Term::Monomial { exponents: vec![1, 0] }]).unwrap();
        let ma = SparseModel::new(a, DMatrix::from_row_slice(2, 2, &[0.5, 1.0, -3.0, 0.0]), 0.1).unwrap();
        let mb = SparseModel::new(b, DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, 0.5, 1.0]), 0.1).unwrap();
        assert_eq!(model_to_text(&ma), model_to_text(&mb));
        assert_eq!(model_to_text(&ma)[0], "dx0/dt = -3.000 x1 + 0.5000 x0");
    }

    #[test]
    fn four_significant_figures() {
        assert_eq!(fmt_sig4(0.2), "0.2000");
        assert_eq!(fmt_sig4(123.456), "123.5");
        assert_eq!(fmt_sig4(9.99996), "10.00");
        assert_eq!(fmt_sig4(-1.66667), "1.667");
        assert_eq!(fmt_sig4(12345.0), "1.234e4");
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let lib = LibrarySpec::polynomial(2, 2).with(Term::Reciprocal { var: 0, shift: 1.0, guard: 1e-3 }).unwrap();
        let xi = DMatrix::from_fn(lib.len(), 2, |i, k| (i as f64 + 0.1) / (k as f64 + 3.0) * std::f64::consts::PI);
        let m = SparseModel::new(lib, xi, 0.05).unwrap();
        let back = SparseModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
