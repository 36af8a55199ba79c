//! Experiment configuration documents (TOML) and their validation.

use std::path::{Path, PathBuf};

use oscidisc_core::hybrid::Partition;
use oscidisc_core::netsim::{CanonicalOscillator, Coupling, CrossCouplingRule, OscillatorKind};
use oscidisc_core::reduction::DimConvention;
use oscidisc_core::sindy::{LibrarySpec, Term, DEFAULT_GUARD};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "OSCIDISC_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    CanonicalHybrid,
    NetworkReduceFit,
    MixedNetwork,
    DimensionSweep,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CanonicalHybrid => "canonical_hybrid",
            Self::NetworkReduceFit => "network_reduce_fit",
            Self::MixedNetwork => "mixed_network",
            Self::DimensionSweep => "dimension_sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_name")]
    pub name: String,
    /// Master seed; every random draw is derived from it.
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub canonical: Option<CanonicalConfig>,
    pub network: Option<NetworkConfig>,
    pub reduction: Option<ReductionConfig>,
    pub sindy: Option<SindyConfig>,
    pub trim: Option<TrimConfig>,
    pub hybrid: Option<HybridConfig>,
    pub sweep: Option<SweepConfig>,
}

fn default_name() -> String {
    "experiment".into()
}

/// Single relaxation oscillator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalConfig {
    pub system: CanonicalOscillator,
    pub x0: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    /// Samples before this time are discarded.
    pub transient: f64,
    /// Whole periods kept in the training window.
    #[serde(default = "default_periods")]
    pub periods: usize,
    /// State column whose upward zero crossings mark period boundaries.
    #[serde(default)]
    pub anchor: usize,
    /// Length of the hybrid re-simulation in true periods.
    #[serde(default = "default_sim_periods")]
    pub sim_periods: f64,
}

fn default_periods() -> usize {
    2
}

fn default_sim_periods() -> f64 {
    1.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default)]
    pub n_kuramoto: usize,
    #[serde(default)]
    pub n_fhn: usize,
    #[serde(default)]
    pub n_rossler: usize,
    #[serde(default)]
    pub n_rayleigh: usize,
    /// Edge probability of the Erdős–Rényi graph.
    pub p: f64,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default)]
    pub cross_coupling: CrossCouplingRule,
    #[serde(default = "default_omega_mean")]
    pub omega_mean: f64,
    #[serde(default = "default_omega_half_width")]
    pub omega_half_width: f64,
    /// Range of the uniform draw for Rayleigh `ε`.
    #[serde(default = "default_epsilon_range")]
    pub epsilon_range: [f64; 2],
    #[serde(default = "default_fhn")]
    pub fhn: OscillatorKind,
    #[serde(default = "OscillatorKind::rossler_default")]
    pub rossler: OscillatorKind,
    pub dt: f64,
    pub t_end: f64,
    pub transient: f64,
    /// Keep every k-th integration step.
    #[serde(default = "one")]
    pub record_every: usize,
}

fn default_omega_mean() -> f64 {
    0.6
}

fn default_omega_half_width() -> f64 {
    0.25
}

fn default_epsilon_range() -> [f64; 2] {
    [0.1, 1.0]
}

fn default_fhn() -> OscillatorKind {
    OscillatorKind::fhn_default(0.2)
}

fn one() -> usize {
    1
}

impl NetworkConfig {
    pub fn n(&self) -> usize {
        self.n_kuramoto + self.n_fhn + self.n_rossler + self.n_rayleigh
    }

    pub fn families_present(&self) -> usize {
        [self.n_kuramoto, self.n_fhn, self.n_rossler, self.n_rayleigh]
            .iter()
            .filter(|&&c| c > 0)
            .count()
    }
}

/// One reduction block: a state component across every node that has it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    pub label: String,
    pub component: usize,
    pub r: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    /// Rank of a single global basis; ignored when `blocks` is set.
    #[serde(default = "two")]
    pub r: usize,
    #[serde(default)]
    pub blocks: Vec<BlockConfig>,
    #[serde(default)]
    pub center: bool,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub dim_convention: DimConvention,
}

fn two() -> usize {
    2
}

fn default_thresholds() -> Vec<f64> {
    vec![0.9, 0.95, 0.99]
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            r: 2,
            blocks: Vec::new(),
            center: false,
            thresholds: default_thresholds(),
            dim_convention: DimConvention::default(),
        }
    }
}

/// Compact description of a candidate-function library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryConfig {
    /// Maximum total polynomial degree; 0 gives the constant only.
    #[serde(default = "one_u32")]
    pub degree: u32,
    /// Restrict the polynomial part to these variables.
    pub variables: Option<Vec<usize>>,
    #[serde(default)]
    pub trig: bool,
    #[serde(default)]
    pub reciprocals: Vec<ReciprocalConfig>,
    #[serde(default)]
    pub abs_terms: Vec<AbsConfig>,
}

fn one_u32() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReciprocalConfig {
    pub var: usize,
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "default_guard")]
    pub guard: f64,
}

fn default_guard() -> f64 {
    DEFAULT_GUARD
}

/// `|x_var|^power · Π x_k^{e_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsConfig {
    pub var: usize,
    pub power: u32,
    #[serde(default)]
    pub exponents: Option<Vec<u32>>,
}

impl LibraryConfig {
    pub fn polynomial(degree: u32) -> Self {
        Self {
            degree,
            variables: None,
            trig: false,
            reciprocals: Vec::new(),
            abs_terms: Vec::new(),
        }
    }

    pub fn build(&self, var_count: usize) -> oscidisc_core::Result<LibrarySpec> {
        let mut lib = match &self.variables {
            Some(vars) => LibrarySpec::polynomial_in(var_count, vars, self.degree)?,
            None => LibrarySpec::polynomial(var_count, self.degree),
        };
        if self.trig {
            lib = lib.with_trig()?;
        }
        for r in &self.reciprocals {
            lib.push(Term::Reciprocal {
                var: r.var,
                shift: r.shift,
                guard: r.guard,
            })?;
        }
        for a in &self.abs_terms {
            lib.push(Term::AbsMonomial {
                var: a.var,
                power: a.power,
                exponents: a.exponents.clone().unwrap_or_else(|| vec![0; var_count]),
            })?;
        }
        Ok(lib)
    }
}

/// Sparse regression on the reduced coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SindyConfig {
    pub library: LibraryConfig,
    pub lambda: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Re-simulation length of the discovered model; defaults to the
    /// recorded window.
    pub sim_time: Option<f64>,
    /// Integration step of the re-simulation; defaults to the network step.
    pub sim_dt: Option<f64>,
}

fn default_max_iter() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrimConfig {
    pub library: LibraryConfig,
    pub lambda: f64,
    pub trim_fraction: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_max_outer")]
    pub max_outer_iter: usize,
}

fn default_max_outer() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridConfig {
    pub slow_library: LibraryConfig,
    pub fast_library: LibraryConfig,
    pub slow_lambda: f64,
    pub fast_lambda: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_min_run")]
    pub min_run: usize,
    #[serde(default = "default_margin")]
    pub margin_fraction: f64,
    #[serde(default)]
    pub partition: Partition,
    /// Hold out every k-th sample from the fits for validation; 0 keeps all.
    #[serde(default)]
    pub holdout_every: usize,
}

fn default_min_run() -> usize {
    3
}

fn default_margin() -> f64 {
    0.02
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Kuramoto node count; FHN nodes fill the rest of `n_total`.
    NKuramoto,
    /// `1 − p`.
    ConnectivityThreshold,
    CouplingKuramoto,
    CouplingFhn,
    OmegaMean,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::NKuramoto => "n_kuramoto",
            Self::ConnectivityThreshold => "connectivity_threshold",
            Self::CouplingKuramoto => "coupling_kuramoto",
            Self::CouplingFhn => "coupling_fhn",
            Self::OmegaMean => "omega_mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Total node count when sweeping `n_kuramoto`.
    pub n_total: Option<usize>,
    pub axis1: SweepAxis,
    pub axis2: Option<SweepAxis>,
    /// Give every trial in a cell the seed of its first trial.
    #[serde(default)]
    pub force_same_seed: bool,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_trials() -> usize {
    20
}

fn default_jobs() -> usize {
    1
}

fn field_err(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::new(field, reason)
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be >= 0, got {v}")))
    }
}

fn fraction(field: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(field_err(field, format!("must lie in [0, 1), got {v}")))
    }
}

fn require<'a, T>(section: &'a Option<T>, name: &str, kind: ExperimentKind) -> Result<&'a T, ConfigError> {
    section
        .as_ref()
        .ok_or_else(|| field_err(name, format!("section is required for {} experiments", kind.as_str())))
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| field_err("<document>", e.message().to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." || path.is_empty() { "<document>".to_string() } else { path };
            field_err(&field, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| field_err("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Output directory: the environment override, else `output_dir`, else
    /// `out/<name>`.
    pub fn resolve_output_dir(&self) -> PathBuf {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(dir);
        }
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(&self.name))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.experiment;
        match kind {
            ExperimentKind::CanonicalHybrid => {
                let c = require(&self.canonical, "canonical", kind)?;
                c.validate()?;
                require(&self.trim, "trim", kind)?.validate(2)?;
                require(&self.hybrid, "hybrid", kind)?.validate(2)?;
            }
            ExperimentKind::NetworkReduceFit | ExperimentKind::MixedNetwork => {
                let n = require(&self.network, "network", kind)?;
                n.validate()?;
                if kind == ExperimentKind::MixedNetwork && n.families_present() < 2 {
                    return Err(field_err("network", "a mixed network needs at least two node families"));
                }
                let red = self.reduction.clone().unwrap_or_default();
                red.validate()?;
                let r = red.total_rank();
                if let Some(s) = &self.sindy {
                    s.validate(r)?;
                }
                if let Some(t) = &self.trim {
                    t.validate(r)?;
                }
                if let Some(h) = &self.hybrid {
                    if self.trim.is_none() {
                        return Err(field_err("trim", "a hybrid fit needs a [trim] section"));
                    }
                    h.validate(r)?;
                }
            }
            ExperimentKind::DimensionSweep => {
                let n = require(&self.network, "network", kind)?;
                n.validate()?;
                self.reduction.clone().unwrap_or_default().validate()?;
                require(&self.sweep, "sweep", kind)?.validate(n)?;
            }
        }
        Ok(())
    }

    pub fn reduction_or_default(&self) -> ReductionConfig {
        self.reduction.clone().unwrap_or_default()
    }
}

impl CanonicalConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        match self.system {
            CanonicalOscillator::VanDerPol { mu } => positive("canonical.system.mu", mu)?,
            CanonicalOscillator::Rayleigh { epsilon } => positive("canonical.system.epsilon", epsilon)?,
        }
        if self.x0.len() != 2 {
            return Err(field_err("canonical.x0", format!("needs 2 entries, got {}", self.x0.len())));
        }
        positive("canonical.dt", self.dt)?;
        positive("canonical.t_end", self.t_end)?;
        non_negative("canonical.transient", self.transient)?;
        if self.transient >= self.t_end {
            return Err(field_err("canonical.transient", "must be below t_end"));
        }
        if self.periods == 0 {
            return Err(field_err("canonical.periods", "must be at least 1"));
        }
        if self.anchor >= 2 {
            return Err(field_err("canonical.anchor", "must be 0 or 1"));
        }
        if !(self.sim_periods >= 1.0 && self.sim_periods.is_finite()) {
            return Err(field_err("canonical.sim_periods", "must be at least 1"));
        }
        Ok(())
    }
}

impl NetworkConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.n() == 0 {
            return Err(field_err("network", "no nodes: set n_kuramoto, n_fhn, n_rossler or n_rayleigh"));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(field_err("network.p", format!("must lie in [0, 1], got {}", self.p)));
        }
        for (name, k) in [
            ("network.coupling.kuramoto", self.coupling.kuramoto),
            ("network.coupling.fhn", self.coupling.fhn),
            ("network.coupling.rossler", self.coupling.rossler),
            ("network.coupling.rayleigh", self.coupling.rayleigh),
        ] {
            non_negative(name, k)?;
        }
        if !self.omega_mean.is_finite() {
            return Err(field_err("network.omega_mean", "must be finite"));
        }
        non_negative("network.omega_half_width", self.omega_half_width)?;
        let [lo, hi] = self.epsilon_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(field_err("network.epsilon_range", "needs 0 < lo <= hi <= 1"));
        }
        if !matches!(self.fhn, OscillatorKind::Fhn { .. }) {
            return Err(field_err("network.fhn.kind", "must be \"fhn\""));
        }
        if !matches!(self.rossler, OscillatorKind::Rossler { .. }) {
            return Err(field_err("network.rossler.kind", "must be \"rossler\""));
        }
        positive("network.dt", self.dt)?;
        positive("network.t_end", self.t_end)?;
        non_negative("network.transient", self.transient)?;
        if self.transient >= self.t_end {
            return Err(field_err("network.transient", "must be below t_end"));
        }
        if self.record_every == 0 {
            return Err(field_err("network.record_every", "must be at least 1"));
        }
        Ok(())
    }
}

impl ReductionConfig {
    pub fn total_rank(&self) -> usize {
        if self.blocks.is_empty() {
            self.r
        } else {
            self.blocks.iter().map(|b| b.r).sum()
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.blocks.is_empty() && self.r == 0 {
            return Err(field_err("reduction.r", "must be at least 1"));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.r == 0 {
                return Err(field_err(&format!("reduction.blocks[{i}].r"), "must be at least 1"));
            }
        }
        if self.thresholds.is_empty() {
            return Err(field_err("reduction.thresholds", "must not be empty"));
        }
        for &t in &self.thresholds {
            if !(t > 0.0 && t <= 1.0) {
                return Err(field_err("reduction.thresholds", format!("{t} lies outside (0, 1]")));
            }
        }
        Ok(())
    }
}

impl LibraryConfig {
    fn validate(&self, field: &str, var_count: usize) -> Result<(), ConfigError> {
        self.build(var_count)
            .map(|_| ())
            .map_err(|e| field_err(field, e.to_string()))
    }
}

impl SindyConfig {
    fn validate(&self, r: usize) -> Result<(), ConfigError> {
        self.library.validate("sindy.library", r)?;
        non_negative("sindy.lambda", self.lambda)?;
        if let Some(t) = self.sim_time {
            positive("sindy.sim_time", t)?;
        }
        if let Some(dt) = self.sim_dt {
            positive("sindy.sim_dt", dt)?;
        }
        Ok(())
    }
}

impl TrimConfig {
    fn validate(&self, r: usize) -> Result<(), ConfigError> {
        self.library.validate("trim.library", r)?;
        non_negative("trim.lambda", self.lambda)?;
        fraction("trim.trim_fraction", self.trim_fraction)?;
        if self.max_outer_iter == 0 {
            return Err(field_err("trim.max_outer_iter", "must be at least 1"));
        }
        Ok(())
    }
}

impl HybridConfig {
    fn validate(&self, r: usize) -> Result<(), ConfigError> {
        self.slow_library.validate("hybrid.slow_library", r)?;
        self.fast_library.validate("hybrid.fast_library", r)?;
        non_negative("hybrid.slow_lambda", self.slow_lambda)?;
        non_negative("hybrid.fast_lambda", self.fast_lambda)?;
        fraction("hybrid.margin_fraction", self.margin_fraction)?;
        if self.min_run == 0 {
            return Err(field_err("hybrid.min_run", "must be at least 1"));
        }
        if self.holdout_every == 1 {
            return Err(field_err("hybrid.holdout_every", "holding out every sample leaves nothing to fit"));
        }
        Ok(())
    }
}

impl SweepConfig {
    fn validate(&self, net: &NetworkConfig) -> Result<(), ConfigError> {
        if self.trials < 2 {
            return Err(field_err("sweep.trials", format!("needs at least 2 trials, got {}", self.trials)));
        }
        if self.jobs == 0 {
            return Err(field_err("sweep.jobs", "must be at least 1"));
        }
        let axes = std::iter::once(("sweep.axis1", &self.axis1)).chain(self.axis2.iter().map(|a| ("sweep.axis2", a)));
        for (name, axis) in axes {
            if axis.values.is_empty() {
                return Err(field_err(&format!("{name}.values"), "must not be empty"));
            }
            for &v in &axis.values {
                let ok = match axis.param {
                    SweepParam::NKuramoto => {
                        let total = self.n_total.unwrap_or(net.n());
                        v >= 0.0 && v.fract() == 0.0 && v <= total as f64
                    }
                    SweepParam::ConnectivityThreshold => (0.0..=1.0).contains(&v),
                    SweepParam::CouplingKuramoto | SweepParam::CouplingFhn => v >= 0.0 && v.is_finite(),
                    SweepParam::OmegaMean => v.is_finite(),
                };
                if !ok {
                    return Err(field_err(
                        &format!("{name}.values"),
                        format!("{v} is not a valid {}", axis.param.as_str()),
                    ));
                }
            }
        }
        if let Some(a2) = &self.axis2 {
            if a2.param == self.axis1.param {
                return Err(field_err("sweep.axis2.param", "must differ from axis1"));
            }
        }
        Ok(())
    }

    pub fn with_overrides(mut self, trials: Option<usize>, jobs: Option<usize>) -> Self {
        if let Some(t) = trials {
            self.trials = t;
        }
        if let Some(j) = jobs {
            self.jobs = j;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = r#"
experiment = "canonical_hybrid"
name = "vdp"

[canonical]
system = { kind = "van_der_pol", mu = 5.0 }
x0 = [2.0, 0.0]
dt = 1e-3
t_end = 60.0
transient = 30.0

[trim]
library = { degree = 3, variables = [0] }
lambda = 0.05
trim_fraction = 0.2

[hybrid]
slow_library = { degree = 3 }
fast_library = { degree = 3 }
slow_lambda = 0.01
fast_lambda = 0.1
"#;

    #[test]
    fn parses_canonical() {
        let cfg = ExperimentConfig::from_toml_str(CANONICAL).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::CanonicalHybrid);
        let c = cfg.canonical.unwrap();
        assert_eq!(c.periods, 2);
        assert_eq!(c.system, CanonicalOscillator::VanDerPol { mu: 5.0 });
        let lib = cfg.trim.unwrap().library.build(2).unwrap();
        assert_eq!(lib.term_names(), vec!["1", "x0", "x0^2", "x0^3"]);
    }

    #[test]
    fn unknown_kind_names_the_field() {
        let bad = CANONICAL.replace("van_der_pol", "duffing");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        assert!(err.field.starts_with("canonical.system"), "{err}");
        assert!(err.to_string().contains("duffing"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let bad = CANONICAL.replace("dt = 1e-3", "dt = 1e-3\nstep = 2");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        assert!(err.field.starts_with("canonical"), "{err}");
        assert!(err.reason.contains("step"), "{err}");
    }

    #[test]
    fn semantic_checks() {
        let bad = CANONICAL.replace("trim_fraction = 0.2", "trim_fraction = 1.5");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        assert_eq!(err.field, "trim.trim_fraction");
        let missing = CANONICAL.replace("[hybrid]", "[unused]");
        assert!(ExperimentConfig::from_toml_str(&missing).is_err());
    }
}
