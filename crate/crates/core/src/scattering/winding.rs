use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use super::transmission::{Mode, Transmission};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{analyze, Tolerances};
use crate::spinmodel::SpinModel;

/// Maximum distance of the accumulated phase from a multiple of `2π`,
/// in turns.
pub const WINDING_RESIDUAL_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingOptions {
    pub initial_points: usize,
    /// Intervals whose phase step exceeds this are bisected.
    pub max_phase_step: f64,
    pub max_points: usize,
    /// Classification thresholds; defaults scale with `‖M‖`.
    pub tolerances: Option<Tolerances>,
}

impl Default for WindingOptions {
    fn default() -> Self {
        Self { initial_points: 2048, max_phase_step: FRAC_PI_4, max_points: 1 << 20, tolerances: None }
    }
}

/// Sampled `t_k` with continuous phase and the winding number around the
/// origin over the whole real line.
#[derive(Debug, Clone)]
pub struct TransmissionTrace {
    pub k_grid: Vec<f64>,
    pub t_values: Vec<Complex64>,
    pub unwrapped_phase: Vec<f64>,
    pub winding: i64,
    /// Phase change over `(−∞, ∞)`: grid part plus both tails.
    pub total_phase: f64,
    /// Phase change over `(−∞, k_lo]` and `[k_hi, ∞)`.
    pub tail_phase: (f64, f64),
}

impl TransmissionTrace {
    /// Distance of `total_phase/2π` from the nearest integer.
    pub fn residual(&self) -> f64 {
        let turns = self.total_phase / TAU;
        (turns - turns.round()).abs()
    }
}

/// Span around all eigenvalues of `M` and `Mtot` with a margin of
/// `100·max|Im|` on each side.
pub fn default_k_span(model: &SpinModel) -> Result<(f64, f64)> {
    let em = linalg::eigenvalues(model.m())?;
    let et = linalg::eigenvalues(model.m_tot())?;
    let floor = 1e-6 * (1.0 + model.m().norm());
    let (re_lo, re_hi, im_max) = extent(em.iter().chain(&et));
    let margin = 100.0 * im_max.max(floor);
    Ok((re_lo - margin, re_hi + margin))
}

fn extent<'a>(eigs: impl Iterator<Item = &'a Complex64>) -> (f64, f64, f64) {
    eigs.fold((f64::INFINITY, f64::NEG_INFINITY, 0.0f64), |(lo, hi, im), e| {
        (lo.min(e.re), hi.max(e.re), im.max(e.im.abs()))
    })
}

/// Evaluates `eval` on `grid` (sorted ascending), bisecting every interval
/// whose phase step exceeds `max_step`, and unwraps the phase.
pub fn sample_trace<F>(eval: F, grid: Vec<f64>, max_step: Option<f64>, max_points: usize) -> Result<(Vec<f64>, Vec<Complex64>, Vec<f64>)>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    if grid.len() > max_points {
        return Err(Error::RefinementCap { points: max_points });
    }
    let mut ks = grid;
    let mut ts: Vec<Complex64> = ks.par_iter().map(|&k| eval(k)).collect::<Result<_>>()?;
    if let Some(step) = max_step {
        loop {
            let mids: Vec<(usize, f64)> = (0..ks.len().saturating_sub(1))
                .filter(|&i| phase_step(ts[i], ts[i + 1]).abs() > step)
                .filter_map(|i| {
                    let mid = 0.5 * (ks[i] + ks[i + 1]);
                    (mid > ks[i] && mid < ks[i + 1]).then_some((i, mid))
                })
                .collect();
            if mids.is_empty() {
                break;
            }
            if ks.len() + mids.len() > max_points {
                return Err(Error::RefinementCap { points: max_points });
            }
            let new_t: Vec<Complex64> = mids.par_iter().map(|&(_, k)| eval(k)).collect::<Result<_>>()?;
            let mut k_out = Vec::with_capacity(ks.len() + mids.len());
            let mut t_out = Vec::with_capacity(ks.len() + mids.len());
            let mut next = mids.iter().zip(new_t).peekable();
            for i in 0..ks.len() {
                k_out.push(ks[i]);
                t_out.push(ts[i]);
                if let Some(((j, k), t)) = next.peek() {
                    if *j == i {
                        k_out.push(*k);
                        t_out.push(*t);
                        next.next();
                    }
                }
            }
            ks = k_out;
            ts = t_out;
        }
    }
    let phase = unwrap_phase(&ts);
    Ok((ks, ts, phase))
}

fn phase_step(a: Complex64, b: Complex64) -> f64 {
    let d = (b / a).arg();
    if d.is_finite() {
        d
    } else {
        0.0
    }
}

fn unwrap_phase(ts: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ts.len());
    let mut acc = ts.first().map_or(0.0, |t| t.arg());
    for (i, t) in ts.iter().enumerate() {
        if i > 0 {
            acc += phase_step(ts[i - 1], *t);
        }
        out.push(acc);
    }
    out
}

/// Grid points clustered around `Re λ` on the scale `|Im λ|` so that the
/// phase of each factor `(k − λ)` changes by at most `delta` between them.
fn seeds(lambda: Complex64, span: (f64, f64), delta: f64, out: &mut Vec<f64>) {
    let a = lambda.im.abs();
    if !(a > 0.0) {
        return;
    }
    let width = span.1 - span.0;
    let mut push = |s: f64| {
        let k = lambda.re + s * a;
        if k > span.0 && k < span.1 {
            out.push(k);
        }
    };
    let steps = (1.0 / delta).ceil() as i64;
    for j in -steps..=steps {
        push(j as f64 / steps as f64);
    }
    let mut s = 1.0;
    while s * a <= width {
        s *= 1.0 + delta;
        push(s);
        push(-s);
    }
}

/// Winding number of `t_k` around the origin (Markov determinant ratio).
///
/// The finite span is sampled and refined until every phase step is below
/// `max_phase_step`; the phase accumulated outside the span is taken from
/// the product over eigenvalues, whose factors have continuous principal
/// arguments there.
pub fn winding_number(model: &SpinModel, k_span: Option<(f64, f64)>, options: &WindingOptions) -> Result<TransmissionTrace> {
    let tol = options.tolerances.unwrap_or_else(|| Tolerances::for_model(model));
    let em = linalg::eigenvalues(model.m())?;
    let et = linalg::eigenvalues(model.m_tot())?;
    let on_axis = |z: &Complex64| z.im.abs() <= tol.tol_real;
    let matched = |z: &Complex64, set: &[Complex64]| set.iter().any(|w| (w - z).norm() <= tol.tol_match);
    if let Some(z) = em.iter().find(|z| on_axis(z) && !matched(z, &et)) {
        return Err(Error::ZeroOnContour { k: z.re });
    }
    if let Some(z) = et.iter().find(|z| on_axis(z) && !matched(z, &em)) {
        return Err(Error::PoleOnContour { k: z.re });
    }

    let (re_lo, re_hi, im_max) = extent(em.iter().chain(&et));
    let span = match k_span {
        Some(span) => {
            let need = 100.0 * im_max;
            let slack = 1e-12 * (1.0 + re_lo.abs().max(re_hi.abs()));
            if !(span.0 < span.1) || span.0 > re_lo - need + slack || span.1 < re_hi + need - slack {
                return Err(Error::InvalidSpan(format!(
                    "[{}, {}] must contain [{re_lo}, {re_hi}] with margin {need}",
                    span.0, span.1
                )));
            }
            span
        }
        None => default_k_span(model)?,
    };
    if options.initial_points < 2 {
        return Err(Error::InvalidSpan("need at least two initial points".into()));
    }

    let n0 = options.initial_points;
    let mut grid: Vec<f64> =
        (0..n0).map(|i| span.0 + (span.1 - span.0) * i as f64 / (n0 - 1) as f64).collect();
    grid[n0 - 1] = span.1;
    let delta = (PI / (8.0 * model.len() as f64)).min(0.1);
    for z in em.iter().chain(&et) {
        seeds(*z, span, delta, &mut grid);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let eval = Transmission::new(model, Mode::Markov)?;
    let (k_grid, t_values, unwrapped_phase) =
        sample_trace(|k| eval.at(k), grid, Some(options.max_phase_step), options.max_points)?;
    if let Some(i) = t_values.iter().position(|t| *t == Complex64::default()) {
        return Err(Error::ZeroOnContour { k: k_grid[i] });
    }

    let (lo, hi) = span;
    let left: f64 = em
        .iter()
        .zip(&et)
        .map(|(e, t)| (e - lo).arg() - (t - lo).arg())
        .sum();
    let right: f64 = -em
        .iter()
        .zip(&et)
        .map(|(e, t)| (hi - e).arg() - (hi - t).arg())
        .sum::<f64>();
    let inner = unwrapped_phase.last().copied().unwrap_or(0.0) - unwrapped_phase.first().copied().unwrap_or(0.0);
    let total_phase = left + inner + right;
    let turns = total_phase / TAU;
    if (turns - turns.round()).abs() >= WINDING_RESIDUAL_TOL {
        return Err(Error::WindingNotInteger { winding: turns });
    }
    Ok(TransmissionTrace {
        k_grid,
        t_values,
        unwrapped_phase,
        winding: turns.round() as i64,
        total_phase,
        tail_phase: (left, right),
    })
}

/// Result of comparing the winding number with `N − N_B`.
#[derive(Debug, Clone)]
pub struct LevinsonCheck {
    pub winding: i64,
    pub n: usize,
    /// Bound states including bound states in the continuum.
    pub n_b: usize,
    pub consistent: bool,
    pub trace: TransmissionTrace,
}

pub fn verify_levinson(model: &SpinModel, options: &WindingOptions) -> Result<LevinsonCheck> {
    let tol = options.tolerances.unwrap_or_else(|| Tolerances::for_model(model));
    let states = analyze(model, tol, true)?.states;
    let trace = winding_number(model, None, &WindingOptions { tolerances: Some(tol), ..*options })?;
    let n = model.len();
    Ok(LevinsonCheck {
        winding: trace.winding,
        n,
        n_b: states.n_b,
        consistent: trace.winding == n as i64 - states.n_b as i64,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinmodel::{build_spin_model, preset_single_atom, PresetFamily};

    fn single(ratio: f64) -> SpinModel {
        let (cfg, res) = preset_single_atom(ratio, 1.0 - ratio, 5.0).unwrap();
        build_spin_model(&cfg, &res, None).unwrap()
    }

    #[test]
    fn single_atom_windings() {
        let opts = WindingOptions::default();
        assert_eq!(winding_number(&single(1.0), None, &opts).unwrap().winding, 1);
        assert_eq!(winding_number(&single(0.8), None, &opts).unwrap().winding, 1);
        assert_eq!(winding_number(&single(0.2), None, &opts).unwrap().winding, 0);
        assert!(matches!(winding_number(&single(0.5), None, &opts), Err(Error::ZeroOnContour { .. })));
    }

    #[test]
    fn phase_steps_are_bounded() {
        let trace = winding_number(&single(0.9), None, &WindingOptions::default()).unwrap();
        assert!(trace.k_grid.windows(2).all(|w| w[0] < w[1]));
        assert!(trace.unwrapped_phase.windows(2).all(|w| (w[1] - w[0]).abs() <= FRAC_PI_4));
        assert!(trace.residual() < 1e-9);
    }

    #[test]
    fn two_atom_windings() {
        let fam = PresetFamily::TwoAtom { omega_eg: 100.0, gamma_tot: 1.0 };
        for (ratio, w) in [(0.2, 0), (0.65, 1), (0.75, 2)] {
            let check = verify_levinson(&fam.spin_model(ratio).unwrap(), &WindingOptions::default()).unwrap();
            assert_eq!(check.winding, w, "ratio {ratio}");
            assert!(check.consistent);
        }
    }

    #[test]
    fn narrow_span_rejected() {
        let m = single(0.9);
        assert!(matches!(winding_number(&m, Some((4.9, 5.1)), &WindingOptions::default()), Err(Error::InvalidSpan(_))));
    }

    #[test]
    fn refinement_cap_enforced() {
        let opts = WindingOptions { max_points: 100, ..WindingOptions::default() };
        assert!(matches!(winding_number(&single(0.9), None, &opts), Err(Error::RefinementCap { .. })));
    }
}
