use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::output::{fmt_f64, matrix_csv, sha256_hex, Csv, Emitter, FileRecord};
use super::runspec::{
    linspace, single_atom_params, ResolvedPreset, RunSpec, SweepParameter, SweepTask, TaskSpec, ToleranceSpec,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scattering::{
    bound_wavefunction, default_k_span, sample_trace, winding_number, Mode, Side, Transmission, WindingOptions,
};
use crate::spectral::{analyze, bisect_count_change, count_below_axis, BoundStateSet, StateClass, Tolerances};
use crate::spinmodel::{build_spin_model, SpinModel};
use crate::twophoton::{g2, Normalization};
use crate::Complex64;

pub const DEFAULT_OUTPUT_DIR: &str = "photon-bound-out";
pub const MANIFEST_NAME: &str = "manifest.json";
const SWEEP_THRESHOLD_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskStatus {
    pub index: usize,
    pub task: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// What a run wrote and which tasks failed.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub config_hash: String,
    pub files: Vec<FileRecord>,
    pub tasks: Vec<TaskStatus>,
}

impl RunReport {
    pub fn failures(&self) -> impl Iterator<Item = &TaskStatus> {
        self.tasks.iter().filter(|t| !t.ok)
    }

    /// 0 when every task succeeded, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.tasks.iter().all(|t| t.ok) {
            0
        } else {
            2
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    config_hash: &'a str,
    run: serde_json::Value,
    tasks: &'a [TaskStatus],
    files: &'a [FileRecord],
}

/// Hash over everything that affects the numbers: the run description
/// (without its output directory) and the library version.
pub fn config_hash<T: Serialize>(run: &T) -> String {
    let body = serde_json::to_string(&(crate::VERSION, run)).expect("run description serializes");
    sha256_hex(body.as_bytes())
}

pub(crate) fn finish(emitter: Emitter, run: serde_json::Value, tasks: Vec<TaskStatus>) -> Result<RunReport> {
    let hash = config_hash(&run);
    let manifest = Manifest { version: crate::VERSION, config_hash: &hash, run, tasks: &tasks, files: emitter.files() };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(emitter.dir().join(MANIFEST_NAME), text)?;
    Ok(RunReport { output_dir: emitter.dir().to_path_buf(), config_hash: hash, files: emitter.files().to_vec(), tasks })
}

fn hashed_spec(spec: &RunSpec) -> serde_json::Value {
    let mut s = spec.clone();
    s.output_dir = None;
    serde_json::to_value(&s).expect("run spec serializes")
}

/// Executes every task of `spec` in order, writing into `spec.output_dir`
/// (or [`DEFAULT_OUTPUT_DIR`]). Task failures are recorded, not fatal.
pub fn run(spec: &RunSpec) -> Result<RunReport> {
    let dir = spec.output_dir().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    run_in(spec, &dir)
}

pub fn run_in(spec: &RunSpec, dir: &Path) -> Result<RunReport> {
    let mut emitter = Emitter::new(dir)?;
    let model = spec.spin_model()?;
    for w in model.warnings() {
        log::warn!("{w}");
    }
    let mut statuses = Vec::new();
    for (index, task) in spec.tasks.iter().enumerate() {
        let prefix = format!("{index:02}_{}", task.name());
        log::info!("running {prefix}");
        let outcome = run_task(spec, &model, task, &prefix, &mut emitter);
        if let Err(e) = &outcome {
            log::error!("{prefix}: {e}");
        }
        statuses.push(TaskStatus {
            index,
            task: task.name().to_string(),
            ok: outcome.is_ok(),
            error: outcome.err().map(|e| e.to_string()),
        });
    }
    finish(emitter, hashed_spec(spec), statuses)
}

fn run_task(spec: &RunSpec, model: &SpinModel, task: &TaskSpec, prefix: &str, out: &mut Emitter) -> Result<()> {
    let tol = spec.tolerances.resolve(model);
    let count_bic = spec.tolerances.count_bic();
    match task {
        TaskSpec::Spectrum => spectrum_task(model, tol, count_bic, prefix, out),
        TaskSpec::Transmission { k_span, points, mode } => {
            let span = k_span.map(|s| (s[0], s[1]));
            transmission_task(model, tol, count_bic, span, *points, mode.unwrap_or(spec.mode), prefix, out).map(|_| ())
        }
        TaskSpec::Winding { k_span } => winding_task(model, tol, count_bic, k_span.map(|s| (s[0], s[1])), prefix, out),
        TaskSpec::Boundstates { z_grid } => boundstates_task(model, tol, count_bic, &z_grid.values(), prefix, out),
        TaskSpec::G2 { tau_span, points, normalization } => {
            let params = single_atom_params(spec)?;
            let taus = linspace(tau_span[0], tau_span[1], *points);
            g2_task(&params, &taus, *normalization, prefix, out)
        }
        TaskSpec::Sweep { parameter, range, steps, task } => {
            let result = sweep(spec, *parameter, *range, *steps, *task)?;
            write_sweep(&result, prefix, out)
        }
    }
}

fn bound_state_csv(states: &BoundStateSet, n: usize) -> String {
    let mut header = vec!["re_E".to_string(), "im_E".into(), "class".into()];
    for j in 0..n {
        header.push(format!("re_e{j}"));
        header.push(format!("im_e{j}"));
    }
    let mut csv = Csv::new(&header);
    for e in &states.entries {
        let mut row = vec![fmt_f64(e.energy.re), fmt_f64(e.energy.im), e.class.as_str().to_string()];
        for a in e.right.iter() {
            row.push(fmt_f64(a.re));
            row.push(fmt_f64(a.im));
        }
        csv.row(&row);
    }
    csv.into_string()
}

fn spectrum_task(model: &SpinModel, tol: Tolerances, count_bic: bool, prefix: &str, out: &mut Emitter) -> Result<()> {
    let analysis = analyze(model, tol, count_bic)?;
    let mut eig = Csv::new(&["matrix", "re", "im"]);
    for (name, dec) in [("M", &analysis.m), ("M_tot", &analysis.m_tot)] {
        for e in dec.eigenvalues() {
            eig.row(&[name.to_string(), fmt_f64(e.re), fmt_f64(e.im)]);
        }
    }
    out.write(&format!("{prefix}_eigenvalues.csv"), &eig.into_string())?;
    out.write(&format!("{prefix}_boundstates.csv"), &bound_state_csv(&analysis.states, model.len()))?;
    out.write(&format!("{prefix}_K.csv"), &matrix_csv(model.channel_coupling()))?;
    out.write(&format!("{prefix}_M.csv"), &matrix_csv(model.m()))?;
    out.write(&format!("{prefix}_M_tot.csv"), &matrix_csv(model.m_tot()))?;
    let s = &analysis.states;
    let mut summary = Csv::new(&[
        "n", "n_b", "bound", "bic_candidate", "transmission_zero", "above_axis", "defective", "markov_figure",
    ]);
    summary.row(&[
        model.len().to_string(),
        s.n_b.to_string(),
        s.count(StateClass::Bound).to_string(),
        s.count(StateClass::BicCandidate).to_string(),
        s.count(StateClass::TransmissionZero).to_string(),
        s.n_above.to_string(),
        s.defective.to_string(),
        fmt_f64(model.config().markov_figure()),
    ]);
    out.write(&format!("{prefix}_summary.csv"), &summary.into_string())
}

/// Winding number, or `N − N_bound` with a flag when a transmission zero
/// sits on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindingSummary {
    pub winding: i64,
    pub n: usize,
    pub n_b: usize,
    pub zero_on_contour: bool,
}

pub fn winding_summary(model: &SpinModel, tol: Tolerances, count_bic: bool) -> Result<WindingSummary> {
    let states = analyze(model, tol, count_bic)?.states;
    let n = model.len();
    let opts = WindingOptions { tolerances: Some(tol), ..WindingOptions::default() };
    match winding_number(model, None, &opts) {
        Ok(trace) => Ok(WindingSummary { winding: trace.winding, n, n_b: states.n_b, zero_on_contour: false }),
        Err(Error::ZeroOnContour { .. }) => {
            let bound = states.count(StateClass::Bound);
            Ok(WindingSummary { winding: n as i64 - bound as i64, n, n_b: states.n_b, zero_on_contour: true })
        }
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn transmission_task(
    model: &SpinModel,
    tol: Tolerances,
    count_bic: bool,
    k_span: Option<(f64, f64)>,
    points: usize,
    mode: Mode,
    prefix: &str,
    out: &mut Emitter,
) -> Result<WindingSummary> {
    let (lo, hi) = match k_span {
        Some(s) => s,
        None => default_k_span(model)?,
    };
    let eval = Transmission::new(model, mode)?;
    let (ks, ts, phase) = sample_trace(|k| eval.at(k), linspace(lo, hi, points), Some(FRAC_PI_4), 1 << 20)?;
    let mut trace = Csv::new(&["k", "re_t", "im_t", "abs_t", "phase_unwrapped"]);
    for ((k, t), p) in ks.iter().zip(&ts).zip(&phase) {
        trace.row(&[fmt_f64(*k), fmt_f64(t.re), fmt_f64(t.im), fmt_f64(t.norm()), fmt_f64(*p)]);
    }
    out.write(&format!("{prefix}_trace.csv"), &trace.into_string())?;

    let summary = winding_summary(model, tol, count_bic)?;
    let mut traj = Csv::new(&["re_t", "im_t", "winding", "zero_on_contour"]);
    let (w, z) = (summary.winding.to_string(), summary.zero_on_contour.to_string());
    for t in &ts {
        traj.row(&[fmt_f64(t.re), fmt_f64(t.im), w.clone(), z.clone()]);
    }
    out.write(&format!("{prefix}_trajectory.csv"), &traj.into_string())?;
    Ok(summary)
}

fn winding_task(
    model: &SpinModel,
    tol: Tolerances,
    count_bic: bool,
    k_span: Option<(f64, f64)>,
    prefix: &str,
    out: &mut Emitter,
) -> Result<()> {
    let states = analyze(model, tol, count_bic)?.states;
    let opts = WindingOptions { tolerances: Some(tol), ..WindingOptions::default() };
    let trace = winding_number(model, k_span, &opts)?;
    let n = model.len() as i64;
    let mut csv = Csv::new(&["winding", "n", "n_b", "consistent", "total_phase", "residual", "points"]);
    csv.row(&[
        trace.winding.to_string(),
        n.to_string(),
        states.n_b.to_string(),
        (trace.winding == n - states.n_b as i64).to_string(),
        fmt_f64(trace.total_phase),
        fmt_f64(trace.residual()),
        trace.k_grid.len().to_string(),
    ]);
    out.write(&format!("{prefix}_winding.csv"), &csv.into_string())?;
    let mut t = Csv::new(&["k", "re_t", "im_t", "abs_t", "phase_unwrapped"]);
    for ((k, v), p) in trace.k_grid.iter().zip(&trace.t_values).zip(&trace.unwrapped_phase) {
        t.row(&[fmt_f64(*k), fmt_f64(v.re), fmt_f64(v.im), fmt_f64(v.norm()), fmt_f64(*p)]);
    }
    out.write(&format!("{prefix}_trace.csv"), &t.into_string())
}

fn boundstates_task(
    model: &SpinModel,
    tol: Tolerances,
    count_bic: bool,
    z_grid: &[f64],
    prefix: &str,
    out: &mut Emitter,
) -> Result<()> {
    let states = analyze(model, tol, count_bic)?.states;
    out.write(&format!("{prefix}_boundstates.csv"), &bound_state_csv(&states, model.len()))?;
    for (alpha, entry) in states.entries.iter().enumerate() {
        if entry.class != StateClass::Bound {
            continue;
        }
        for (side, tag) in [(Side::Right, "right"), (Side::Left, "left")] {
            let wf = bound_wavefunction(model, entry, side, z_grid)?;
            let mut csv = Csv::new(&["z", "re_phi", "im_phi", "abs_phi"]);
            for (z, p) in wf.z_grid.iter().zip(&wf.photon) {
                csv.row(&[fmt_f64(*z), fmt_f64(p.re), fmt_f64(p.im), fmt_f64(p.norm())]);
            }
            out.write(&format!("{prefix}_state{alpha}_{tag}.csv"), &csv.into_string())?;
        }
    }
    Ok(())
}

fn g2_task(
    params: &crate::twophoton::SingleAtomParams,
    taus: &[f64],
    normalization: Normalization,
    prefix: &str,
    out: &mut Emitter,
) -> Result<()> {
    let corr = g2(taus, params, normalization);
    let mut csv = Csv::new(&["tau", "g2", "abs_psi2_sq"]);
    for ((t, g), a) in corr.tau_grid.iter().zip(&corr.g2_values).zip(&corr.abs_psi2_sq) {
        csv.row(&[fmt_f64(*t), fmt_f64(*g), fmt_f64(*a)]);
    }
    out.write(&format!("{prefix}_g2.csv"), &csv.into_string())
}

/// One sweep point. Failures are kept in `error` instead of aborting.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub n_b: Option<usize>,
    pub winding: Option<i64>,
    pub zero_on_contour: bool,
    pub min_abs_t: Option<f64>,
    pub error: Option<String>,
}

/// A bound-state count change between adjacent sweep points, refined by
/// bisection on the number of eigenvalues of `M` below the real axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepThreshold {
    pub bracket: (f64, f64),
    pub n_b: (usize, usize),
    /// `None` when the strict count does not change inside the bracket.
    pub refined: Option<(f64, Complex64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
    pub thresholds: Vec<SweepThreshold>,
    pub config_hash: String,
    pub tolerances: ToleranceSpec,
}

fn preset_at(p: ResolvedPreset, parameter: SweepParameter, value: f64) -> ResolvedPreset {
    let mut q = p;
    match parameter {
        SweepParameter::GammaRatio => {
            let gt = p.gamma_tot();
            q.gamma = value * gt;
            q.gamma_prime = (1.0 - value) * gt;
        }
        SweepParameter::Gamma => q.gamma = value,
        SweepParameter::GammaPrime => q.gamma_prime = value,
        SweepParameter::Separation => q.separation = value,
    }
    q
}

fn preset_model(p: ResolvedPreset) -> Result<SpinModel> {
    let (config, reservoir) = p.build()?;
    build_spin_model(&config, &reservoir, None)
}

/// Smallest `|t_k|` over a uniform grid on the default span and at the
/// real parts of the eigenvalues of `M`.
pub fn min_abs_transmission(model: &SpinModel) -> Result<f64> {
    let (lo, hi) = default_k_span(model)?;
    let mut ks = linspace(lo, hi, 1025);
    ks.extend(linalg::eigenvalues(model.m())?.iter().map(|e| e.re));
    let eval = Transmission::new(model, Mode::Markov)?;
    Ok(ks.iter().filter_map(|&k| eval.at(k).ok()).map(|t| t.norm()).fold(f64::INFINITY, f64::min))
}

fn sweep_point(p: ResolvedPreset, tolerances: &ToleranceSpec, task: SweepTask, value: f64) -> SweepRow {
    let mut row = SweepRow { value, n_b: None, winding: None, zero_on_contour: false, min_abs_t: None, error: None };
    let outcome = (|| -> Result<()> {
        let model = preset_model(p)?;
        let tol = tolerances.resolve(&model);
        let states = analyze(&model, tol, tolerances.count_bic())?.states;
        row.n_b = Some(states.n_b);
        if task == SweepTask::Winding {
            let s = winding_summary(&model, tol, tolerances.count_bic())?;
            row.zero_on_contour = s.zero_on_contour;
            row.winding = (!s.zero_on_contour).then_some(s.winding);
        }
        row.min_abs_t = Some(min_abs_transmission(&model)?);
        Ok(())
    })();
    row.error = outcome.err().map(|e| e.to_string());
    row
}

/// Evaluates `task` on `steps` evenly spaced values of `parameter` and
/// refines every change of `N_B` between neighbouring points.
pub fn sweep(
    spec: &RunSpec,
    parameter: SweepParameter,
    range: [f64; 2],
    steps: usize,
    task: SweepTask,
) -> Result<SweepResult> {
    let preset = spec.preset().ok_or_else(|| Error::InvalidConfig("sweeps need a preset ensemble".into()))?;
    if !(range[0] < range[1]) || steps < 2 {
        return Err(Error::Validation(vec![format!("sweep range [{}, {}] with {steps} steps", range[0], range[1])]));
    }
    let values = linspace(range[0], range[1], steps);
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| sweep_point(preset_at(preset, parameter, v), &spec.tolerances, task, v))
        .collect();

    let tol = SWEEP_THRESHOLD_RTOL * range[0].abs().max(range[1].abs()).max(1.0);
    let count = |v: f64| count_below_axis(preset_model(preset_at(preset, parameter, v))?.m());
    let mut thresholds = Vec::new();
    for pair in rows.windows(2) {
        let (Some(a), Some(b)) = (pair[0].n_b, pair[1].n_b) else { continue };
        if a == b {
            continue;
        }
        let bracket = (pair[0].value, pair[1].value);
        let refined = match bisect_count_change(count, bracket.0, bracket.1, tol) {
            Ok(((lo, hi), _)) => {
                let mid = 0.5 * (lo + hi);
                let m = preset_model(preset_at(preset, parameter, mid))?;
                let e = crate::spectral::closest_to_axis(m.m())?;
                Some((mid, e))
            }
            Err(Error::NoBracket { .. }) => None,
            Err(e) => return Err(e),
        };
        thresholds.push(SweepThreshold { bracket, n_b: (a, b), refined });
    }
    let hash = config_hash(&(hashed_spec(spec), parameter, range, steps, task));
    Ok(SweepResult { parameter, rows, thresholds, config_hash: hash, tolerances: spec.tolerances })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_sweep(result: &SweepResult, prefix: &str, out: &mut Emitter) -> Result<()> {
    let mut csv = Csv::new(&[result.parameter.as_str(), "n_b", "winding", "zero_on_contour", "min_abs_t", "error"]);
    for r in &result.rows {
        csv.row(&[
            fmt_f64(r.value),
            opt(r.n_b),
            opt(r.winding),
            r.zero_on_contour.to_string(),
            r.min_abs_t.map(fmt_f64).unwrap_or_default(),
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        ]);
    }
    out.write(&format!("{prefix}.csv"), &csv.into_string())?;
    let mut th = Csv::new(&["lo", "hi", "n_b_lo", "n_b_hi", "threshold", "re_e", "im_e"]);
    for t in &result.thresholds {
        let (value, re, im) = match t.refined {
            Some((v, e)) => (fmt_f64(v), fmt_f64(e.re), fmt_f64(e.im)),
            None => Default::default(),
        };
        th.row(&[
            fmt_f64(t.bracket.0),
            fmt_f64(t.bracket.1),
            t.n_b.0.to_string(),
            t.n_b.1.to_string(),
            value,
            re,
            im,
        ]);
    }
    out.write(&format!("{prefix}_thresholds.csv"), &th.into_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::runspec::load_runspec;

    #[test]
    fn single_atom_sweep_finds_half() {
        let spec = load_runspec(r#"{"ensemble": {"single_atom": {"gamma_ratio": 0.3}}}"#).unwrap();
        let res = sweep(&spec, SweepParameter::GammaRatio, [0.0, 1.0], 101, SweepTask::Spectrum).unwrap();
        for r in &res.rows {
            let expected = if r.value < 0.5 { 1 } else { 0 };
            assert_eq!(r.n_b, Some(expected), "ratio {}", r.value);
        }
        assert_eq!(res.thresholds.len(), 1);
        let (v, _) = res.thresholds[0].refined.unwrap();
        assert!((v - 0.5).abs() < 1e-9, "{v}");
    }

    #[test]
    fn two_atom_sweep_has_two_thresholds() {
        let spec = load_runspec(r#"{"ensemble": {"two_atom": {"gamma_ratio": 0.3}}}"#).unwrap();
        let res = sweep(&spec, SweepParameter::GammaRatio, [0.0, 1.0], 41, SweepTask::Spectrum).unwrap();
        let counts: Vec<usize> = res.thresholds.iter().map(|t| t.n_b.0).collect();
        assert_eq!(counts, vec![2, 1]);
        assert!(res.thresholds.iter().all(|t| t.refined.is_some()));
    }

    #[test]
    fn winding_summary_flags_zero() {
        let spec = load_runspec(r#"{"ensemble": {"single_atom": {"gamma_ratio": 0.5}}}"#).unwrap();
        let model = spec.spin_model().unwrap();
        let s = winding_summary(&model, Tolerances::for_model(&model), true).unwrap();
        assert!(s.zero_on_contour);
        assert_eq!(s.winding, 1);
    }

    #[test]
    fn failed_task_sets_exit_code() {
        let dir = std::env::temp_dir().join(format!("photon-bound-run-{}", std::process::id()));
        let spec = load_runspec(r#"{"ensemble": {"single_atom": {"gamma_ratio": 0.5}}, "tasks": [{"winding": {}}, "spectrum"]}"#)
            .unwrap();
        let report = run_in(&spec, &dir).unwrap();
        assert_eq!(report.exit_code(), 2);
        assert_eq!(report.failures().count(), 1);
        assert!(dir.join(MANIFEST_NAME).exists());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
