//! Run configuration, read from a TOML file. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use deepwave::probe::ProbeOptions;
use deepwave::{Grid, LineMethod, Profile, Transforms};
use serde::{Deserialize, Serialize};

use crate::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyIdentities,
    StokesContinue,
    SolitaryProbe,
    Spectrum,
    BvpCheck,
    LinearSolve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyIdentities => "verify-identities",
            Command::StokesContinue => "stokes-continue",
            Command::SolitaryProbe => "solitary-probe",
            Command::Spectrum => "spectrum",
            Command::BvpCheck => "bvp-check",
            Command::LinearSolve => "linear-solve",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKindSpec {
    Line,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kind: GridKindSpec,
    pub n: usize,
    /// Half-width `L` of `[-L, L)` on the line, the period on periodic grids.
    #[serde(default)]
    pub length: Option<f64>,
}

impl GridSpec {
    pub fn build(&self) -> deepwave::Result<Grid> {
        match self.kind {
            GridKindSpec::Line => Grid::line(self.n, self.length.unwrap_or(100.0)),
            GridKindSpec::Periodic => Grid::periodic(self.n, self.length.unwrap_or(2.0 * std::f64::consts::PI)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `a exp(-((x-c)/s)²)`
    Gaussian,
    /// `a sech²((x-c)/s)`
    Sech2,
    /// `a / (1 + ((x-c)/s)²)`
    Lorentzian,
    /// `a cos(k x + φ) exp(-((x-c)/s)²)`
    Packet,
    /// `a cos(k x + φ)`, for periodic grids
    Cosine,
}

/// An initial guess, right-hand side or potential shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub name: String,
    pub shape: Shape,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default = "one")]
    pub wavenumber: f64,
    #[serde(default)]
    pub phase: f64,
}

fn one() -> f64 {
    1.0
}

impl Template {
    pub fn sample(&self, grid: Grid) -> deepwave::Result<Profile> {
        let (a, s, c, k, p) = (self.amplitude, self.width, self.center, self.wavenumber, self.phase);
        let env = move |x: f64| (-((x - c) / s).powi(2)).exp();
        match self.shape {
            Shape::Gaussian => Profile::from_fn(grid, |x| a * env(x)),
            Shape::Sech2 => Profile::from_fn(grid, |x| a / ((x - c) / s).cosh().powi(2)),
            Shape::Lorentzian => Profile::from_fn(grid, |x| a / (1.0 + ((x - c) / s).powi(2))),
            Shape::Packet => Profile::from_fn(grid, |x| a * (k * x + p).cos() * env(x)),
            Shape::Cosine => Profile::from_fn(grid, |x| a * (k * x + p).cos()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Skew pairing, Pohozaev (relative to `1 + ∫w²`) and cross-form checks.
    pub identity: f64,
    /// Sup-norm of the commutator profile.
    pub commutator: f64,
    /// Newton residual for periodic solves.
    pub newton: f64,
    /// Residual bound for `bvp-check` and `linear-solve`.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { identity: 1e-5, commutator: 1e-4, newton: 1e-11, residual: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSpec {
    pub line_method: LineMethod,
    pub tail_threshold: f64,
}

impl Default for TransformSpec {
    fn default() -> Self {
        let t = Transforms::default();
        TransformSpec { line_method: t.line_method, tail_threshold: t.tail_threshold }
    }
}

impl TransformSpec {
    pub fn build(&self) -> Transforms {
        Transforms::with_method(self.line_method).with_tail_threshold(self.tail_threshold)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StokesSpec {
    /// Starting amplitude; `sqrt(1 - μ)` when absent and `μ < 1`.
    pub amplitude: Option<f64>,
    pub steps: usize,
    pub step_size: f64,
    pub max_iter: usize,
}

impl Default for StokesSpec {
    fn default() -> Self {
        StokesSpec { amplitude: None, steps: 10, step_size: 0.02, max_iter: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitySpec {
    /// Size of the seeded family used when no templates are given.
    pub family_size: usize,
}

impl Default for IdentitySpec {
    fn default() -> Self {
        IdentitySpec { family_size: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSpec {
    /// Write the dense operator as `operator.bin`.
    pub export_operator: bool,
    /// Number of eigenvectors written as profiles, lowest first.
    pub eigenvectors: usize,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        SpectrumSpec { export_operator: false, eigenvectors: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub grid: GridSpec,
    #[serde(default = "default_mu")]
    pub mu: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub templates: Vec<Template>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub transforms: TransformSpec,
    #[serde(default)]
    pub stokes: StokesSpec,
    #[serde(default)]
    pub probe: ProbeOptions,
    #[serde(default)]
    pub identities: IdentitySpec,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
}

fn default_mu() -> Vec<f64> {
    vec![1.0]
}

fn default_out() -> PathBuf {
    PathBuf::from("deepwave-out")
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            ConfigError::Parse { line, column, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid.build().map_err(|e| invalid("grid", e.to_string()))?;
        if self.mu.is_empty() {
            return Err(invalid("mu", "at least one value is required"));
        }
        if let Some(m) = self.mu.iter().find(|m| !m.is_finite()) {
            return Err(invalid("mu", format!("non-finite value {m}")));
        }
        positive("tolerances.identity", self.tolerances.identity)?;
        positive("tolerances.commutator", self.tolerances.commutator)?;
        positive("tolerances.newton", self.tolerances.newton)?;
        positive("tolerances.residual", self.tolerances.residual)?;
        positive("transforms.tail_threshold", self.transforms.tail_threshold)?;
        positive("stokes.step_size", self.stokes.step_size)?;
        positive("probe.converged_tol", self.probe.converged_tol)?;
        positive("probe.collapse_tol", self.probe.collapse_tol)?;
        positive("probe.gmres_tol", self.probe.gmres_tol)?;
        positive("probe.divergence_factor", self.probe.divergence_factor)?;
        if let Some(a) = self.stokes.amplitude {
            positive("stokes.amplitude", a)?;
        }
        let mut names: Vec<&str> = self.templates.iter().map(|t| t.name.as_str()).collect();
        names.sort_unstable();
        if let Some(d) = names.windows(2).find(|p| p[0] == p[1]) {
            return Err(invalid("templates.name", format!("duplicate name {:?}", d[0])));
        }
        for t in &self.templates {
            positive("templates.width", t.width)?;
        }
        Ok(())
    }

    /// Multiply every tolerance by `scale`.
    pub fn scale_tolerances(&mut self, scale: f64) -> Result<(), ConfigError> {
        positive("tolerance-scale", scale)?;
        self.tolerances.identity *= scale;
        self.tolerances.commutator *= scale;
        self.tolerances.newton *= scale;
        self.tolerances.residual *= scale;
        self.probe.converged_tol *= scale;
        Ok(())
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.to_path_buf(), source: e })?;
    RunConfig::parse(&text)
}
