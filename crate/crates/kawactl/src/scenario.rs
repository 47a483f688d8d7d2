//! Scenario files: JSON describing one run.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use kawahara::control::PicardConfig;
use kawahara::solver::SolverConfig;
use kawahara::verify::CASE_NAMES;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::inputs::Inputs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    ControlBoundary,
    ControlInternal,
    Verify,
    Convergence,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::ControlBoundary => "control-boundary",
            Mode::ControlInternal => "control-internal",
            Mode::Verify => "verify",
            Mode::Convergence => "convergence",
        }
    }

    fn is_control(self) -> bool {
        matches!(self, Mode::ControlBoundary | Mode::ControlInternal)
    }
}

fn one() -> f64 {
    1.0
}

/// Signal in time on `[0, T]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeSignal {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `a sin(2π k t / T + phase)`.
    Sine {
        amplitude: f64,
        #[serde(default = "one")]
        cycles: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `a cos(2π k t / T + phase)`.
    Cosine {
        amplitude: f64,
        #[serde(default = "one")]
        cycles: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `a sin²(π k t / T)`.
    SineSquared {
        amplitude: f64,
        #[serde(default = "one")]
        cycles: f64,
    },
    /// `Σ c_k t^k`.
    Polynomial { coeffs: Vec<f64> },
    /// Columns `t,value`, one row per time level.
    Csv { path: PathBuf },
}

/// Profile on `[0, L]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceSignal {
    #[default]
    Zero,
    /// `scale · ω(x)` with the scenario's weight.
    Omega {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `a sin(m π x / L)`.
    Sine {
        amplitude: f64,
        #[serde(default = "mode_one")]
        mode: u32,
    },
    /// `a exp(−((x − c) / w)²)`.
    Bump { amplitude: f64, center: f64, width: f64 },
    /// `Σ c_k x^k`.
    Polynomial { coeffs: Vec<f64> },
    /// Columns `x,value`, one row per node including both ends.
    Csv { path: PathBuf },
}

fn mode_one() -> u32 {
    1
}

/// Space-time field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSignal {
    #[default]
    Zero,
    /// `space(x) · time(t)`.
    Separable { space: SpaceSignal, time: TimeSignal },
    /// Columns `t,x,value`, time-major.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OmegaSpec {
    /// `x³ (x − L)²`, optionally scaled to `ω″(L) = 1`.
    Canonical {
        #[serde(default)]
        normalize: bool,
    },
    /// Monomial coefficients, lowest degree first.
    Coeffs { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Explicit {
        #[serde(default)]
        phi0: f64,
        phiprime: TimeSignal,
    },
    /// Moment of a forward run driven by this control; the synthesized
    /// control is then compared against it.
    Forward { control: TimeSignal },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub g: FieldSignal,
    /// Required lower bound on `|∫ g ω|`.
    pub g0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub length: f64,
    /// Interior node count `N`; the spacing is `L / (N + 1)`.
    pub interior: usize,
    pub horizon: f64,
    /// Time steps `M`; `dt = dx` (rounded to hit `T`) when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            length: 1.0,
            interior: 127,
            horizon: 0.5,
            steps: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySpec {
    /// `u(t, 0)`.
    pub h1: TimeSignal,
    /// `u(t, L)`.
    pub h2: TimeSignal,
    /// `u_x(t, 0)`.
    pub h3: TimeSignal,
    /// `u_x(t, L)`.
    pub h4: TimeSignal,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<FieldSignal>,
    /// Enters as `∂x f2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f2: Option<FieldSignal>,
}

impl SourceSpec {
    fn is_empty(&self) -> bool {
        self.f1.is_none() && self.f2.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub seed: u64,
    pub corrupt_qprime_sign: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub cases: Vec<String>,
    pub levels: usize,
    pub horizon: f64,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self {
            cases: vec!["poly-decay".into(), "nonlinear-poly".into()],
            levels: 3,
            horizon: 0.5,
        }
    }
}

/// Thresholds of the per-mode pass/fail check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSpec {
    /// Bound on `sup |q − φ|`.
    pub residual: f64,
    /// Bound on the relative `L²` error of a recovered control.
    pub recovery: f64,
    /// Lower bound on the geometric-fit `R²` of the Picard residuals.
    pub fit_r2: f64,
    pub min_order: f64,
    pub max_order: f64,
}

impl Default for CheckSpec {
    fn default() -> Self {
        Self {
            residual: 1e-6,
            recovery: 1e-4,
            fit_r2: 0.99,
            min_order: 1.8,
            max_order: 2.3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub nonlinear: bool,
    #[serde(default)]
    pub u0: SpaceSignal,
    #[serde(default)]
    pub boundary: BoundarySpec,
    /// Trace `u_xx(t, L)`. Synthesized in control-boundary mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<TimeSignal>,
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub picard: PicardConfig,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub convergence: ConvergenceSpec,
    #[serde(default)]
    pub check: CheckSpec,
    /// Output directory, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Reads, resolves and validates a scenario whose file names its mode.
pub fn parse_scenario(path: &Path) -> Result<Scenario, CliError> {
    parse_scenario_as(path, None)
}

/// As [`parse_scenario`], with the mode given by the caller. A file that
/// names a different mode is rejected.
pub fn parse_scenario_as(path: &Path, mode: Option<Mode>) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
    let mut sc: Scenario = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    sc.resolve_paths(&base);
    let mut issues = Vec::new();
    match (sc.mode, mode) {
        (Some(a), Some(b)) if a != b => issues.push(format!("scenario declares mode {} but {} was requested", a.name(), b.name())),
        (None, Some(b)) => sc.mode = Some(b),
        (None, None) => issues.push("mode is missing".into()),
        _ => {}
    }
    if issues.is_empty() {
        issues = sc.validate();
    }
    if issues.is_empty() {
        Ok(sc)
    } else {
        Err(CliError::Validation(issues))
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn resolve_time(base: &Path, s: &mut TimeSignal) {
    if let TimeSignal::Csv { path } = s {
        resolve(base, path);
    }
}

fn resolve_space(base: &Path, s: &mut SpaceSignal) {
    if let SpaceSignal::Csv { path } = s {
        resolve(base, path);
    }
}

fn resolve_field(base: &Path, s: &mut FieldSignal) {
    match s {
        FieldSignal::Csv { path } => resolve(base, path),
        FieldSignal::Separable { space, time } => {
            resolve_space(base, space);
            resolve_time(base, time);
        }
        FieldSignal::Zero => {}
    }
}

impl Scenario {
    pub fn mode(&self) -> Option<Mode> {
        self.mode
    }

    /// Makes every relative data path and the output directory absolute
    /// against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        resolve_space(base, &mut self.u0);
        let b = &mut self.boundary;
        for s in [&mut b.h1, &mut b.h2, &mut b.h3, &mut b.h4] {
            resolve_time(base, s);
        }
        if let Some(c) = &mut self.control {
            resolve_time(base, c);
        }
        for f in [&mut self.source.f1, &mut self.source.f2].into_iter().flatten() {
            resolve_field(base, f);
        }
        match &mut self.target {
            Some(TargetSpec::Explicit { phiprime, .. }) => resolve_time(base, phiprime),
            Some(TargetSpec::Forward { control }) => resolve_time(base, control),
            None => {}
        }
        if let Some(p) = &mut self.profile {
            resolve_field(base, &mut p.g);
        }
        if let Some(o) = &mut self.output {
            resolve(base, o);
        }
    }

    /// Every problem with the scenario, empty when it is runnable.
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let Some(mode) = self.mode else {
            return vec!["mode is missing".into()];
        };
        if let Err(e) = self.solver.validate() {
            issues.push(format!("solver: {e}"));
        }
        match mode {
            Mode::Verify => return issues,
            Mode::Convergence => {
                let c = &self.convergence;
                if c.cases.is_empty() {
                    issues.push("convergence.cases is empty".into());
                }
                for name in &c.cases {
                    if !CASE_NAMES.contains(&name.as_str()) {
                        issues.push(format!("convergence.cases: unknown case {name:?} (known: {})", CASE_NAMES.join(", ")));
                    }
                }
                if c.levels < 3 {
                    issues.push(format!("convergence.levels must be at least 3, got {}", c.levels));
                }
                if !(c.horizon.is_finite() && c.horizon > 0.0) {
                    issues.push(format!("convergence.horizon must be positive, got {}", c.horizon));
                }
                return issues;
            }
            _ => {}
        }
        if mode.is_control() {
            if let Err(e) = self.picard.validate() {
                issues.push(format!("picard: {e}"));
            }
            if self.omega.is_none() {
                issues.push(format!("omega is required in {} mode", mode.name()));
            }
            if self.target.is_none() {
                issues.push(format!("target is required in {} mode", mode.name()));
            }
        } else if self.target.is_some() {
            issues.push("target is only used by the control modes".into());
        }
        match mode {
            Mode::ControlBoundary => {
                if self.control.is_some() {
                    issues.push("control is the unknown in control-boundary mode and must not be given".into());
                }
                if self.profile.is_some() {
                    issues.push("profile is only used in control-internal mode".into());
                }
            }
            Mode::ControlInternal => {
                if self.profile.is_none() {
                    issues.push("profile is required in control-internal mode".into());
                }
                if !self.source.is_empty() {
                    issues.push("source must be empty in control-internal mode; the control is the only source".into());
                }
            }
            _ => {
                if self.profile.is_some() {
                    issues.push("profile is only used in control-internal mode".into());
                }
            }
        }
        if let Some(p) = &self.profile {
            if !(p.g0 > 0.0) {
                issues.push(format!("profile.g0 must be positive, got {}", p.g0));
            }
        }
        if let Err(more) = Inputs::build(self) {
            issues.extend(more);
        }
        issues
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes") + "\n"
    }
}
