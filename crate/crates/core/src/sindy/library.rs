use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default guard radius for reciprocal terms.
pub const DEFAULT_GUARD: f64 = 1e-3;

fn default_guard() -> f64 {
    DEFAULT_GUARD
}

/// One candidate function of the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Term {
    Constant,
    /// `Π x_k^{e_k}`.
    Monomial { exponents: Vec<u32> },
    Sin { var: usize },
    Cos { var: usize },
    /// `1 / (x_var − shift)`, with the denominator clamped away from zero to
    /// `±guard`, keeping its sign.
    Reciprocal {
        var: usize,
        shift: f64,
        #[serde(default = "default_guard")]
        guard: f64,
    },
    /// `|x_var|^power · Π x_k^{e_k}`.
    AbsMonomial {
        var: usize,
        power: u32,
        exponents: Vec<u32>,
    },
}

fn monomial(x: &[f64], exponents: &[u32]) -> f64 {
    exponents
        .iter()
        .zip(x)
        .filter(|(e, _)| **e > 0)
        .map(|(e, v)| v.powi(*e as i32))
        .product()
}

fn monomial_name(exponents: &[u32], names: &[String]) -> String {
    let parts: Vec<String> = exponents
        .iter()
        .zip(names)
        .filter(|(e, _)| **e > 0)
        .map(|(e, n)| if *e == 1 { n.clone() } else { format!("{n}^{e}") })
        .collect();
    parts.join(" ")
}

impl Term {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Term::Constant => 1.0,
            Term::Monomial { exponents } => monomial(x, exponents),
            Term::Sin { var } => x[*var].sin(),
            Term::Cos { var } => x[*var].cos(),
            Term::Reciprocal { var, shift, guard } => {
                let den = x[*var] - shift;
                if den.abs() < *guard {
                    1.0 / if den < 0.0 { -guard } else { *guard }
                } else {
                    1.0 / den
                }
            }
            Term::AbsMonomial {
                var,
                power,
                exponents,
            } => x[*var].abs().powi(*power as i32) * monomial(x, exponents),
        }
    }

    pub fn name(&self, names: &[String]) -> String {
        match self {
            Term::Constant => "1".into(),
            Term::Monomial { exponents } => monomial_name(exponents, names),
            Term::Sin { var } => format!("sin({})", names[*var]),
            Term::Cos { var } => format!("cos({})", names[*var]),
            Term::Reciprocal { var, shift, .. } => {
                if *shift == 0.0 {
                    format!("1/{}", names[*var])
                } else if *shift > 0.0 {
                    format!("1/({}-{})", names[*var], shift)
                } else {
                    format!("1/({}+{})", names[*var], -shift)
                }
            }
            Term::AbsMonomial {
                var,
                power,
                exponents,
            } => {
                let base = if *power == 1 {
                    format!("|{}|", names[*var])
                } else {
                    format!("|{}|^{power}", names[*var])
                };
                let rest = monomial_name(exponents, names);
                if rest.is_empty() {
                    base
                } else {
                    format!("{base} {rest}")
                }
            }
        }
    }

    fn check(&self, var_count: usize) -> Result<()> {
        let var_ok = |v: usize| {
            if v < var_count {
                Ok(())
            } else {
                Err(Error::invalid(format!("term refers to variable {v} of {var_count}")))
            }
        };
        let exps_ok = |e: &Vec<u32>| {
            if e.len() == var_count {
                Ok(())
            } else {
                Err(Error::Dimension {
                    context: "monomial exponents",
                    expected: var_count,
                    got: e.len(),
                })
            }
        };
        match self {
            Term::Constant => Ok(()),
            Term::Monomial { exponents } => exps_ok(exponents),
            Term::Sin { var } | Term::Cos { var } => var_ok(*var),
            Term::Reciprocal { var, shift, guard } => {
                var_ok(*var)?;
                if !(*guard > 0.0) || !shift.is_finite() {
                    return Err(Error::invalid("reciprocal term needs a positive guard radius"));
                }
                Ok(())
            }
            Term::AbsMonomial { var, exponents, .. } => {
                var_ok(*var)?;
                exps_ok(exponents)
            }
        }
    }

    /// Canonical form used for duplicate detection: a monomial with all
    /// exponents zero is the constant.
    fn canonical(&self) -> Term {
        match self {
            Term::Monomial { exponents } if exponents.iter().all(|e| *e == 0) => Term::Constant,
            Term::AbsMonomial {
                power: 0,
                exponents,
                ..
            } => Term::Monomial {
                exponents: exponents.clone(),
            }
            .canonical(),
            other => other.clone(),
        }
    }
}

/// Ordered list of unique candidate terms over `var_count` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LibraryDoc", into = "LibraryDoc")]
pub struct LibrarySpec {
    var_count: usize,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
struct LibraryDoc {
    var_count: usize,
    terms: Vec<Term>,
}

impl TryFrom<LibraryDoc> for LibrarySpec {
    type Error = Error;
    fn try_from(doc: LibraryDoc) -> Result<Self> {
        LibrarySpec::new(doc.var_count, doc.terms)
    }
}

impl From<LibrarySpec> for LibraryDoc {
    fn from(l: LibrarySpec) -> Self {
        LibraryDoc {
            var_count: l.var_count,
            terms: l.terms,
        }
    }
}

/// Exponent vectors of total degree `deg` over `d` variables, in
/// descending lexicographic order (`x²`, `xy`, `y²`).
fn exponents_of_degree(d: usize, deg: u32) -> Vec<Vec<u32>> {
    if d == 0 {
        return if deg == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=deg).rev() {
        for mut rest in exponents_of_degree(d - 1, deg - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl LibrarySpec {
    pub fn new(var_count: usize, terms: Vec<Term>) -> Result<Self> {
        let mut lib = Self {
            var_count,
            terms: Vec::with_capacity(terms.len()),
        };
        for t in terms {
            lib.push(t)?;
        }
        Ok(lib)
    }

    /// All monomials up to `max_degree`, constant first, grouped by degree.
    pub fn polynomial(var_count: usize, max_degree: u32) -> Self {
        let terms = (0..=max_degree)
            .flat_map(|deg| exponents_of_degree(var_count, deg))
            .map(|exponents| {
                if exponents.iter().all(|e| *e == 0) {
                    Term::Constant
                } else {
                    Term::Monomial { exponents }
                }
            })
            .collect();
        Self { var_count, terms }
    }

    /// Monomials up to `max_degree` in the listed variables only; the other
    /// variables get zero exponents.
    pub fn polynomial_in(var_count: usize, vars: &[usize], max_degree: u32) -> Result<Self> {
        if let Some(&v) = vars.iter().find(|&&v| v >= var_count) {
            return Err(Error::invalid(format!("variable {v} out of range for {var_count} variables")));
        }
        let sub = Self::polynomial(vars.len(), max_degree);
        let terms = sub
            .terms
            .into_iter()
            .map(|t| match t {
                Term::Monomial { exponents } => {
                    let mut full = vec![0; var_count];
                    for (e, &v) in exponents.iter().zip(vars) {
                        full[v] += *e;
                    }
                    Term::Monomial { exponents: full }
                }
                other => other,
            })
            .collect();
        Self::new(var_count, terms)
    }

    /// Monomials of degree 1..=`max_degree` in variable `var` alone.
    pub fn powers_of(var_count: usize, var: usize, max_degree: u32) -> Vec<Term> {
        (1..=max_degree)
            .map(|e| {
                let mut exponents = vec![0; var_count];
                exponents[var] = e;
                Term::Monomial { exponents }
            })
            .collect()
    }

    /// Appends a term, rejecting duplicates and ill-formed descriptors.
    pub fn push(&mut self, term: Term) -> Result<()> {
        term.check(self.var_count)?;
        let canon = term.canonical();
        if self.terms.iter().any(|t| t.canonical() == canon) {
            return Err(Error::invalid(format!(
                "duplicate library term `{}`",
                term.name(&self.default_names())
            )));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn with(mut self, term: Term) -> Result<Self> {
        self.push(term)?;
        Ok(self)
    }

    /// Adds `sin x_k` and `cos x_k` for every variable.
    pub fn with_trig(mut self) -> Result<Self> {
        for var in 0..self.var_count {
            self.push(Term::Sin { var })?;
            self.push(Term::Cos { var })?;
        }
        Ok(self)
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn default_names(&self) -> Vec<String> {
        (0..self.var_count).map(|k| format!("x{k}")).collect()
    }

    pub fn term_names(&self) -> Vec<String> {
        let names = self.default_names();
        self.terms.iter().map(|t| t.name(&names)).collect()
    }

    /// Evaluates every term at one state.
    pub fn eval_row(&self, x: &[f64], out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(&self.terms) {
            *o = t.eval(x);
        }
    }
}

/// Evaluates the library at every row of `states`.
pub fn build_library(states: &DMatrix<f64>, spec: &LibrarySpec) -> Result<DMatrix<f64>> {
    if states.ncols() != spec.var_count() {
        return Err(Error::Dimension {
            context: "library variable count",
            expected: spec.var_count(),
            got: states.ncols(),
        });
    }
    let (m, p) = (states.nrows(), spec.len());
    let mut theta = DMatrix::zeros(m, p);
    let mut row = vec![0.0; states.ncols()];
    let mut vals = vec![0.0; p];
    for i in 0..m {
        for (j, r) in row.iter_mut().enumerate() {
            *r = states[(i, j)];
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i });
        }
        spec.eval_row(&row, &mut vals);
        for (k, v) in vals.iter().enumerate() {
            theta[(i, k)] = *v;
        }
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn cubic_in_one_variable() {
        let lib = LibrarySpec::polynomial(1, 3);
        let theta = build_library(&DMatrix::from_row_slice(1, 1, &[2.0]), &lib).unwrap();
        assert_eq!(theta.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn quadratic_in_two_variables_order() {
        let lib = LibrarySpec::polynomial(2, 2);
        assert_eq!(lib.term_names(), vec!["1", "x0", "x1", "x0^2", "x0 x1", "x1^2"]);
        let theta = build_library(&DMatrix::from_row_slice(1, 2, &[2.0, 3.0]), &lib).unwrap();
        assert_eq!(
            theta.row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0]
        );
    }

    #[test]
    fn polynomial_in_subset() {
        let lib = LibrarySpec::polynomial_in(2, &[1], 3).unwrap();
        assert_eq!(lib.term_names(), vec!["1", "x1", "x1^2", "x1^3"]);
        assert!(LibrarySpec::polynomial_in(2, &[2], 1).is_err());
    }

    #[test]
    fn trig_terms() {
        let lib = LibrarySpec::polynomial(1, 1).with_trig().unwrap();
        let theta = build_library(&DMatrix::from_row_slice(1, 1, &[FRAC_PI_2]), &lib).unwrap();
        assert!((theta[(0, 2)] - 1.0).abs() < 1e-15);
        assert!(theta[(0, 3)].abs() < 1e-15);
    }

    #[test]
    fn reciprocal_is_clamped_with_sign() {
        let t = Term::Reciprocal {
            var: 0,
            shift: 1.0,
            guard: 1e-3,
        };
        assert_eq!(t.eval(&[3.0]), 0.5);
        assert_eq!(t.eval(&[1.0 + 1e-5]), 1e3);
        assert_eq!(t.eval(&[1.0 - 1e-5]), -1e3);
        assert_eq!(t.eval(&[1.0]), 1e3);
    }

    #[test]
    fn abs_monomial() {
        let t = Term::AbsMonomial {
            var: 0,
            power: 2,
            exponents: vec![0, 1],
        };
        assert_eq!(t.eval(&[-3.0, 2.0]), 18.0);
        assert_eq!(t.name(&["x".into(), "y".into()]), "|x|^2 y");
    }

    #[test]
    fn duplicates_rejected() {
        let lib = LibrarySpec::polynomial(2, 1);
        assert!(lib.clone().with(Term::Monomial { exponents: vec![0, 0] }).is_err());
        assert!(lib.clone().with(Term::Monomial { exponents: vec![1, 0] }).is_err());
        assert!(lib.with(Term::Sin { var: 2 }).is_err());
        let bad_guard = LibrarySpec::new(
            1,
            vec![Term::Reciprocal {
                var: 0,
                shift: 0.0,
                guard: 0.0,
            }],
        );
        assert!(bad_guard.is_err());
    }

    #[test]
    fn non_finite_row_is_reported() {
        let lib = LibrarySpec::polynomial(1, 2);
        let x = DMatrix::from_row_slice(3, 1, &[1.0, f64::NAN, 2.0]);
        assert!(matches!(build_library(&x, &lib), Err(Error::NonFinite { row: 1 })));
    }

    #[test]
    fn serde_validates() {
        let lib = LibrarySpec::polynomial(2, 2);
        let s = serde_json::to_string(&lib).unwrap();
        let back: LibrarySpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, lib);
        let dup = r#"{"var_count":1,"terms":[{"type":"constant"},{"type":"constant"}]}"#;
        assert!(serde_json::from_str::<LibrarySpec>(dup).is_err());
    }
}
