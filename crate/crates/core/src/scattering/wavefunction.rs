use num_complex::Complex64;

use super::propagator::propagator;
use super::transmission::{scattering_solve, Mode};
use crate::error::{Error, Result};
use crate::linalg::{CVector, I};
use crate::spectral::{BoundStateEntry, StateClass};
use crate::spinmodel::{heaviside, SpinModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavefunctionKind {
    Scattering,
    BoundRight,
    BoundLeft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

/// Photon amplitude on a grid together with the atomic amplitudes.
#[derive(Debug, Clone)]
pub struct WavefunctionSample {
    pub z_grid: Vec<f64>,
    pub photon: Vec<Complex64>,
    pub atomic: CVector,
    pub energy: Complex64,
    pub kind: WavefunctionKind,
}

impl WavefunctionSample {
    pub fn max_abs(&self) -> f64 {
        self.photon.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// `|φ|` at both grid edges relative to the peak. Zero when the photon
    /// amplitude vanishes identically.
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let first = self.photon.first().map_or(0.0, |p| p.norm());
        let last = self.photon.last().map_or(0.0, |p| p.norm());
        first.max(last) / peak
    }
}

/// Right scattering state at energy `k`:
/// `φ(z) = exp(ikz) [1 − i Σ_j Θ(z − z_j) e_j v_j*]`.
///
/// With `Mode::Exact` this is the exact chiral solution; with
/// `Mode::Markov` the source phases use the model's reference frequency, so
/// that far downstream `φ/exp(ikz)` equals the Markov `t_k`.
pub fn scattering_wavefunction(model: &SpinModel, k: f64, mode: Mode, z_grid: &[f64]) -> Result<WavefunctionSample> {
    let sol = scattering_solve(model, k, mode)?;
    let atoms = model.config().atoms();
    let sources: Vec<Complex64> = sol.amplitudes.iter().zip(sol.drive.iter()).map(|(e, v)| e * v.conj()).collect();
    let photon = z_grid
        .iter()
        .map(|&z| {
            let acc: Complex64 = atoms.iter().zip(&sources).map(|(a, s)| s * heaviside(z - a.position)).sum();
            Complex64::from_polar(1.0, k * z) * (Complex64::new(1.0, 0.0) - I * acc)
        })
        .collect();
    Ok(WavefunctionSample {
        z_grid: z_grid.to_vec(),
        photon,
        atomic: sol.amplitudes,
        energy: Complex64::new(k, 0.0),
        kind: WavefunctionKind::Scattering,
    })
}

/// Photon part of a right (`Σ_j e_j V_j* G_E(z − z_j)`) or left
/// (`Σ_j ē_j V_j* G_{E*}(z − z_j)`) bound state.
pub fn bound_wavefunction(model: &SpinModel, entry: &BoundStateEntry, side: Side, z_grid: &[f64]) -> Result<WavefunctionSample> {
    if entry.class != StateClass::Bound || !(entry.energy.im < 0.0) {
        return Err(Error::NotABoundState { energy: entry.energy });
    }
    if entry.right.len() != model.len() {
        return Err(Error::DimensionMismatch { expected: model.len(), found: entry.right.len() });
    }
    let (amps, energy, kind) = match side {
        Side::Right => (&entry.right, entry.energy, WavefunctionKind::BoundRight),
        Side::Left => (&entry.left, entry.energy.conj(), WavefunctionKind::BoundLeft),
    };
    let atoms = model.config().atoms();
    let photon = z_grid
        .iter()
        .map(|&z| {
            atoms
                .iter()
                .zip(amps.iter())
                .map(|(a, e)| Ok(e * a.coupling.conj() * propagator(energy, z - a.position)?))
                .sum::<Result<Complex64>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WavefunctionSample { z_grid: z_grid.to_vec(), photon, atomic: amps.clone(), energy: entry.energy, kind })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::spectral::{analyze, Tolerances};
    use crate::spinmodel::{build_spin_model, preset_single_atom};

    fn model(g: f64, gp: f64, w: f64) -> SpinModel {
        let (cfg, res) = preset_single_atom(g, gp, w).unwrap();
        build_spin_model(&cfg, &res, None).unwrap()
    }

    #[test]
    fn scattering_boundary_conditions() {
        let m = model(0.4, 0.1, 2.0);
        let k = 2.2;
        let grid = [-30.0, -1.0, 1.0, 30.0];
        let wf = scattering_wavefunction(&m, k, Mode::Exact, &grid).unwrap();
        let t = scattering_solve(&m, k, Mode::Exact).unwrap().transmission;
        assert!((wf.photon[0] - Complex64::from_polar(1.0, k * -30.0)).norm() < 1e-15);
        let ratio = wf.photon[3] / Complex64::from_polar(1.0, k * 30.0);
        assert!((ratio - t).norm() < 1e-12);
    }

    #[test]
    fn lossless_resonant_amplitude_is_one() {
        let m = model(0.5, 0.0, 1.0);
        let wf = scattering_wavefunction(&m, 1.0, Mode::Markov, &[0.5, 2.0, 7.0]).unwrap();
        for p in &wf.photon {
            assert!((p.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn decoupled_bound_state_has_no_photon() {
        let m = model(0.0, 0.7, 1.0);
        let states = analyze(&m, Tolerances::for_model(&m), true).unwrap().states;
        let entry = &states.entries[0];
        let wf = bound_wavefunction(&m, entry, Side::Right, &[-1.0, 0.0, 1.0]).unwrap();
        assert!(wf.photon.iter().all(|p| *p == Complex64::default()));
        assert_eq!(wf.atomic[0], c(1.0, 0.0));
    }

    #[test]
    fn non_bound_entry_rejected() {
        let m = model(0.5, 0.5, 1.0);
        let states = analyze(&m, Tolerances::for_model(&m), true).unwrap().states;
        let err = bound_wavefunction(&m, &states.entries[0], Side::Left, &[0.0]).unwrap_err();
        assert!(matches!(err, Error::NotABoundState { .. }));
    }
}
