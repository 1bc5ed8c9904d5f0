use std::f64::consts::TAU;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::scattering::Mode;
use crate::spectral::Tolerances;
use crate::spinmodel::{
    build_spin_model, preset_single_atom, preset_two_atom_with_separation, Atom, EnsembleConfig, ReservoirCoupling,
    SpinModel,
};
use crate::twophoton::{Normalization, SingleAtomParams};

pub const DEFAULT_OMEGA_EG: f64 = 100.0;
pub const DEFAULT_GAMMA_TOT: f64 = 1.0;

/// A complete run description: one ensemble, its reservoir and a list of
/// tasks executed in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub ensemble: EnsembleSpec,
    /// Only for custom ensembles; presets carry their own reservoir.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reservoir: Option<ReservoirSpec>,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<TaskSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    /// Default evaluation mode of transmission tasks.
    #[serde(default = "default_mode")]
    pub mode: Mode,
}

fn default_tasks() -> Vec<TaskSpec> {
    vec![TaskSpec::Spectrum]
}

fn default_mode() -> Mode {
    Mode::Markov
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleSpec {
    SingleAtom(PresetParams),
    TwoAtom(PresetParams),
    Custom(CustomEnsemble),
}

/// Preset parameters. Give either `gamma_ratio` (with optional
/// `gamma_tot`, default 1) or both `gamma` and `gamma_prime`; loading
/// fills in the rest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_tot: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_eg: Option<f64>,
    /// Two-atom preset only; defaults to one resonant wavelength.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
}

/// Rates and geometry of a preset after defaults are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedPreset {
    pub two_atom: bool,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub omega_eg: f64,
    pub separation: f64,
}

impl ResolvedPreset {
    pub fn gamma_tot(&self) -> f64 {
        self.gamma + self.gamma_prime
    }

    pub fn build(&self) -> Result<(EnsembleConfig, ReservoirCoupling)> {
        if self.two_atom {
            preset_two_atom_with_separation(self.gamma, self.gamma_prime, self.omega_eg, self.separation)
        } else {
            preset_single_atom(self.gamma, self.gamma_prime, self.omega_eg)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomEnsemble {
    pub omega_eg: f64,
    pub atoms: Vec<AtomSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub z: f64,
    /// `[re, im]`.
    pub coupling: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReservoirSpec {
    /// Independent decay `γ'_i` per atom: `K' = −i diag(γ')`.
    Independent(Vec<f64>),
    /// Explicit `K'`, rows of `[re, im]` cells.
    Matrix(Vec<Vec<[f64; 2]>>),
    /// `K' = Γ'[[−i, −1], [−1, −i]]`.
    PaperTwoAtom { gamma_prime: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    /// Absolute; defaults to `1e-9‖M‖`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_real: Option<f64>,
    /// Absolute; defaults to `1e-7‖M‖`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_match: Option<f64>,
    /// Count bound states in the continuum in `N_B`. Defaults to true.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count_bic: Option<bool>,
}

impl ToleranceSpec {
    pub fn resolve(&self, model: &SpinModel) -> Tolerances {
        Tolerances::for_model(model).with_overrides(self.tol_real, self.tol_match)
    }

    pub fn count_bic(&self) -> bool {
        self.count_bic.unwrap_or(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.points)
    }
}

/// `n` evenly spaced points with both ends exact.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let mut v: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
            v[n - 1] = b;
            v
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    GammaRatio,
    Gamma,
    GammaPrime,
    Separation,
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::GammaRatio => "gamma_ratio",
            Self::Gamma => "gamma",
            Self::GammaPrime => "gamma_prime",
            Self::Separation => "separation",
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma_ratio" => Ok(Self::GammaRatio),
            "gamma" => Ok(Self::Gamma),
            "gamma_prime" => Ok(Self::GammaPrime),
            "separation" => Ok(Self::Separation),
            other => Err(Error::InvalidParameter(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

/// Observable evaluated at every sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTask {
    /// Bound-state count only.
    Spectrum,
    /// Bound-state count and winding number.
    Winding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Spectrum,
    Transmission {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_span: Option<[f64; 2]>,
        #[serde(default = "default_points")]
        points: usize,
        /// Falls back to the run-level mode.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<Mode>,
    },
    Winding {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_span: Option<[f64; 2]>,
    },
    Boundstates {
        #[serde(default = "default_z_grid")]
        z_grid: GridSpec,
    },
    G2 {
        #[serde(default = "default_tau_span")]
        tau_span: [f64; 2],
        #[serde(default = "default_tau_points")]
        points: usize,
        #[serde(default = "default_normalization")]
        normalization: Normalization,
    },
    Sweep {
        parameter: SweepParameter,
        range: [f64; 2],
        steps: usize,
        #[serde(default = "default_sweep_task")]
        task: SweepTask,
    },
}

fn default_points() -> usize {
    2048
}

fn default_z_grid() -> GridSpec {
    GridSpec { start: -20.0, stop: 20.0, points: 401 }
}

fn default_tau_span() -> [f64; 2] {
    [-5.0, 5.0]
}

fn default_tau_points() -> usize {
    201
}

fn default_normalization() -> Normalization {
    Normalization::AsymptoticUnit
}

fn default_sweep_task() -> SweepTask {
    SweepTask::Spectrum
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Transmission { .. } => "transmission",
            Self::Winding { .. } => "winding",
            Self::Boundstates { .. } => "boundstates",
            Self::G2 { .. } => "g2",
            Self::Sweep { .. } => "sweep",
        }
    }

    /// The task with every optional parameter at its default.
    pub fn default_for(name: &str) -> Option<Self> {
        Some(match name {
            "spectrum" => Self::Spectrum,
            "transmission" => Self::Transmission { k_span: None, points: default_points(), mode: None },
            "winding" => Self::Winding { k_span: None },
            "boundstates" => Self::Boundstates { z_grid: default_z_grid() },
            "g2" => Self::G2 {
                tau_span: default_tau_span(),
                points: default_tau_points(),
                normalization: default_normalization(),
            },
            _ => return None,
        })
    }
}

impl RunSpec {
    /// Rates and geometry of a preset ensemble; `None` for custom ones.
    pub fn preset(&self) -> Option<ResolvedPreset> {
        let (p, two_atom) = match &self.ensemble {
            EnsembleSpec::SingleAtom(p) => (p, false),
            EnsembleSpec::TwoAtom(p) => (p, true),
            EnsembleSpec::Custom(_) => return None,
        };
        let omega_eg = p.omega_eg.unwrap_or(DEFAULT_OMEGA_EG);
        Some(ResolvedPreset {
            two_atom,
            gamma: p.gamma.unwrap_or(f64::NAN),
            gamma_prime: p.gamma_prime.unwrap_or(f64::NAN),
            omega_eg,
            separation: p.separation.unwrap_or(TAU / omega_eg),
        })
    }

    pub fn build(&self) -> Result<(EnsembleConfig, ReservoirCoupling)> {
        if let Some(preset) = self.preset() {
            return preset.build();
        }
        let EnsembleSpec::Custom(custom) = &self.ensemble else { unreachable!() };
        let atoms = custom.atoms.iter().map(|a| Atom::new(a.z, c(a.coupling[0], a.coupling[1]))).collect();
        let config = EnsembleConfig::new(custom.omega_eg, atoms)?;
        let reservoir = match &self.reservoir {
            None => return Err(Error::InvalidConfig("custom ensembles need a reservoir".into())),
            Some(ReservoirSpec::Independent(rates)) => ReservoirCoupling::independent(rates)?,
            Some(ReservoirSpec::Matrix(rows)) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidConfig("reservoir matrix must be square".into()));
                }
                let cells: Vec<_> = rows.iter().flatten().map(|z| c(z[0], z[1])).collect();
                ReservoirCoupling::new(CMatrix::from_row_slice(n, n, &cells))?
            }
            Some(ReservoirSpec::PaperTwoAtom { gamma_prime }) => {
                let g = *gamma_prime;
                if !(g >= 0.0 && g.is_finite()) {
                    return Err(Error::NegativeRate { name: "gamma_prime", value: g });
                }
                ReservoirCoupling::new(CMatrix::from_row_slice(2, 2, &[c(0.0, -g), c(-g, 0.0), c(-g, 0.0), c(0.0, -g)]))?
            }
        };
        Ok((config, reservoir))
    }

    pub fn spin_model(&self) -> Result<SpinModel> {
        let (config, reservoir) = self.build()?;
        build_spin_model(&config, &reservoir, None)
    }

    pub fn output_dir(&self) -> Option<&std::path::Path> {
        self.output_dir.as_deref()
    }
}

/// Parses and validates a JSON run description, filling in defaults.
pub fn load_runspec(document: &str) -> Result<RunSpec> {
    let mut spec: RunSpec = serde_json::from_str(document)
        .map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    let mut violations = Vec::new();
    resolve_preset(&mut spec, &mut violations);
    validate(&spec, &mut violations);
    if violations.is_empty() {
        Ok(spec)
    } else {
        Err(Error::Validation(violations))
    }
}

fn resolve_preset(spec: &mut RunSpec, violations: &mut Vec<String>) {
    let (p, two_atom) = match &mut spec.ensemble {
        EnsembleSpec::SingleAtom(p) => (p, false),
        EnsembleSpec::TwoAtom(p) => (p, true),
        EnsembleSpec::Custom(_) => return,
    };
    if spec.reservoir.is_some() {
        violations.push("reservoir: presets define their own reservoir; use a custom ensemble".into());
    }
    match (p.gamma_ratio, p.gamma, p.gamma_prime) {
        // already resolved
        (Some(r), Some(g), Some(gp))
            if p.gamma_tot.is_some_and(|gt| g == r * gt && gp == (1.0 - r) * gt || g + gp == gt && r == g / gt) => {}
        (Some(r), None, None) => {
            let gt = *p.gamma_tot.get_or_insert(DEFAULT_GAMMA_TOT);
            if !(0.0..=1.0).contains(&r) {
                violations.push(format!("ensemble.gamma_ratio: {r} outside [0, 1]"));
            }
            if !(gt > 0.0 && gt.is_finite()) {
                violations.push(format!("ensemble.gamma_tot: must be positive, got {gt}"));
            }
            p.gamma = Some(r * gt);
            p.gamma_prime = Some((1.0 - r) * gt);
        }
        (None, Some(g), Some(gp)) => {
            let gt = g + gp;
            if p.gamma_tot.is_some_and(|t| t != gt) {
                violations.push("ensemble.gamma_tot: inconsistent with gamma + gamma_prime".into());
            }
            p.gamma_tot = Some(gt);
            if gt > 0.0 {
                p.gamma_ratio = Some(g / gt);
            }
        }
        _ => violations.push("ensemble: give either gamma_ratio or both gamma and gamma_prime".into()),
    }
    for (name, v) in [("gamma", p.gamma), ("gamma_prime", p.gamma_prime)] {
        if let Some(v) = v {
            if !(v >= 0.0 && v.is_finite()) {
                violations.push(format!("ensemble.{name}: rate must be finite and >= 0, got {v}"));
            }
        }
    }
    let omega = *p.omega_eg.get_or_insert(DEFAULT_OMEGA_EG);
    if !omega.is_finite() || (two_atom && !(omega > 0.0)) {
        violations.push(format!("ensemble.omega_eg: invalid value {omega}"));
    }
    if two_atom {
        let sep = *p.separation.get_or_insert(TAU / omega);
        if !(sep >= 0.0 && sep.is_finite()) {
            violations.push(format!("ensemble.separation: must be finite and >= 0, got {sep}"));
        }
    } else if p.separation.is_some() {
        violations.push("ensemble.separation: only meaningful for the two-atom preset".into());
    }
}

fn validate(spec: &RunSpec, violations: &mut Vec<String>) {
    if violations.is_empty() {
        if let Err(e) = spec.spin_model() {
            violations.push(format!("ensemble: {e}"));
        }
    }
    for (name, v) in [("tol_real", spec.tolerances.tol_real), ("tol_match", spec.tolerances.tol_match)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                violations.push(format!("tolerances.{name}: must be positive, got {v}"));
            }
        }
    }
    if spec.tasks.is_empty() {
        violations.push("tasks: at least one task is required".into());
    }
    let single_atom = matches!(spec.ensemble, EnsembleSpec::SingleAtom(_));
    for (i, task) in spec.tasks.iter().enumerate() {
        let at = format!("tasks[{i}] ({})", task.name());
        match task {
            TaskSpec::Spectrum => {}
            TaskSpec::Transmission { k_span, points, .. } => {
                if let Some(s) = k_span {
                    check_span(&at, "k_span", *s, violations);
                }
                if *points < 2 {
                    violations.push(format!("{at}: points must be >= 2"));
                }
            }
            TaskSpec::Winding { k_span } => {
                if let Some(s) = k_span {
                    check_span(&at, "k_span", *s, violations);
                }
            }
            TaskSpec::Boundstates { z_grid } => {
                check_span(&at, "z_grid", [z_grid.start, z_grid.stop], violations);
                if z_grid.points < 2 {
                    violations.push(format!("{at}: z_grid.points must be >= 2"));
                }
            }
            TaskSpec::G2 { tau_span, points, .. } => {
                if !single_atom {
                    violations.push(format!("{at}: g2 is available for the single_atom preset only"));
                }
                check_span(&at, "tau_span", *tau_span, violations);
                if *points < 2 {
                    violations.push(format!("{at}: points must be >= 2"));
                }
            }
            TaskSpec::Sweep { parameter, range, steps, .. } => {
                check_span(&at, "range", *range, violations);
                if *steps < 2 {
                    violations.push(format!("{at}: steps must be >= 2"));
                }
                match spec.preset() {
                    None => violations.push(format!("{at}: sweeps need a preset ensemble")),
                    Some(p) => {
                        let (lo, hi) = (range[0], range[1]);
                        let bad = match parameter {
                            SweepParameter::GammaRatio => lo < 0.0 || hi > 1.0,
                            SweepParameter::Gamma | SweepParameter::GammaPrime => lo < 0.0,
                            SweepParameter::Separation => !p.two_atom || lo < 0.0,
                        };
                        if bad {
                            violations.push(format!("{at}: range [{lo}, {hi}] invalid for {}", parameter.as_str()));
                        }
                    }
                }
            }
        }
    }
}

fn check_span(at: &str, field: &str, span: [f64; 2], violations: &mut Vec<String>) {
    if !(span[0].is_finite() && span[1].is_finite() && span[0] < span[1]) {
        violations.push(format!("{at}: {field} [{}, {}] is empty or not finite", span[0], span[1]));
    }
}

/// Single-atom parameters of a validated single-atom preset spec.
pub(crate) fn single_atom_params(spec: &RunSpec) -> Result<SingleAtomParams> {
    match (spec.preset(), &spec.ensemble) {
        (Some(p), EnsembleSpec::SingleAtom(_)) => SingleAtomParams::new(p.gamma, p.gamma_prime, p.omega_eg),
        _ => Err(Error::InvalidConfig("g2 needs the single_atom preset".into())),
    }
}
