use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, shifted, CMatrix, CVector, I};
use crate::spectral::{BoundStateSet, SpectralDecomposition, StateClass};
use crate::spinmodel::SpinModel;

/// `k` closer than `POLE_TOL·max(1, |k|)` to an eigenvalue of `Mtot` is a pole hit.
pub const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Spin matrices frozen at the model's reference frequency.
    Markov,
    /// Propagation phases re-evaluated at every `k`.
    Exact,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markov" => Ok(Self::Markov),
            "exact" => Ok(Self::Exact),
            other => Err(Error::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

/// Determinant-ratio evaluator `t_k = det(k − M)/det(k − Mtot)`.
///
/// In Markov mode the eigenvalues of `Mtot` are computed once for pole
/// detection; in exact mode both matrices and the pole set are rebuilt per `k`.
#[derive(Debug, Clone)]
pub struct Transmission<'a> {
    model: &'a SpinModel,
    mode: Mode,
    poles: Vec<Complex64>,
}

impl<'a> Transmission<'a> {
    pub fn new(model: &'a SpinModel, mode: Mode) -> Result<Self> {
        let poles = match mode {
            Mode::Markov => linalg::eigenvalues(model.m_tot())?,
            Mode::Exact => Vec::new(),
        };
        Ok(Self { model, mode, poles })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn at(&self, k: f64) -> Result<Complex64> {
        if !k.is_finite() {
            return Err(Error::InvalidParameter(format!("k = {k} is not finite")));
        }
        match self.mode {
            Mode::Markov => {
                check_pole(k, &self.poles)?;
                Ok(det_ratio(self.model.m(), self.model.m_tot(), k))
            }
            Mode::Exact => {
                let (m, m_tot) = self.model.matrices_at(k);
                check_pole(k, &linalg::eigenvalues(&m_tot)?)?;
                Ok(det_ratio(&m, &m_tot, k))
            }
        }
    }
}

fn check_pole(k: f64, poles: &[Complex64]) -> Result<()> {
    let tol = POLE_TOL * k.abs().max(1.0);
    match poles.iter().find(|p| (Complex64::new(k, 0.0) - **p).norm() < tol) {
        Some(&pole) => Err(Error::PoleOnGrid { k, pole }),
        None => Ok(()),
    }
}

fn det_ratio(m: &CMatrix, m_tot: &CMatrix, k: f64) -> Complex64 {
    shifted(m, k).determinant() / shifted(m_tot, k).determinant()
}

/// `t_k` as the ratio of characteristic polynomials of `M` and `Mtot`.
pub fn transmission_det(model: &SpinModel, k: f64, mode: Mode) -> Result<Complex64> {
    Transmission::new(model, mode)?.at(k)
}

/// `t_k = Π_α (k − e_α)/(k − ẽ_α)`; both matrices must be diagonalizable.
pub fn transmission_product(m_dec: &SpectralDecomposition, mtot_dec: &SpectralDecomposition, k: f64) -> Result<Complex64> {
    for d in [m_dec, mtot_dec] {
        if !d.diagonalizable() {
            return Err(Error::Defective { defect_measure: d.defect_measure() });
        }
    }
    if m_dec.len() != mtot_dec.len() {
        return Err(Error::DimensionMismatch { expected: m_dec.len(), found: mtot_dec.len() });
    }
    check_pole(k, mtot_dec.eigenvalues())?;
    let kc = Complex64::new(k, 0.0);
    Ok(m_dec
        .eigenvalues()
        .iter()
        .zip(mtot_dec.eigenvalues())
        .map(|(&e, &et)| (kc - e) / (kc - et))
        .product())
}

/// Atomic amplitudes and transmission of the right scattering state.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub k: f64,
    pub mode: Mode,
    /// `e_{j,k}`.
    pub amplitudes: CVector,
    /// Drive `v_j = V_j exp(iκ z_j)`, `κ = k` (exact) or the reference frequency (Markov).
    pub drive: CVector,
    pub transmission: Complex64,
}

/// Solves `(k − Mtot) e = v` and returns `t_k = 1 − i v^H e`.
pub fn scattering_solve(model: &SpinModel, k: f64, mode: Mode) -> Result<ScatteringSolution> {
    if !k.is_finite() {
        return Err(Error::InvalidParameter(format!("k = {k} is not finite")));
    }
    let (m_tot, drive) = match mode {
        Mode::Markov => (model.m_tot().clone(), model.channel_vector()),
        Mode::Exact => (model.matrices_at(k).1, model.config().channel_vector(k)),
    };
    let system = shifted(&m_tot, k);
    let scale = system.norm().max(f64::MIN_POSITIVE);
    let lu = system.lu();
    let amplitudes = lu.solve(&drive).ok_or(Error::SingularSystem { k })?;
    // near-singular solves are reported rather than trusted
    let pivots = lu.u().diagonal();
    if pivots.iter().any(|p| p.norm() <= POLE_TOL * scale) {
        return Err(Error::SingularSystem { k });
    }
    let transmission = Complex64::new(1.0, 0.0) - I * drive.dotc(&amplitudes);
    Ok(ScatteringSolution { k, mode, amplitudes, drive, transmission })
}

/// Real parts of the transmission-zero entries.
pub fn find_transmission_zeros(states: &BoundStateSet) -> Vec<f64> {
    states.of_class(StateClass::TransmissionZero).map(|e| e.energy.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::spinmodel::{build_spin_model, preset_single_atom, Atom, EnsembleConfig, ReservoirCoupling};

    fn single(g: f64, gp: f64, w: f64) -> SpinModel {
        let (cfg, res) = preset_single_atom(g, gp, w).unwrap();
        build_spin_model(&cfg, &res, None).unwrap()
    }

    #[test]
    fn single_atom_closed_form() {
        let (g, gp, w) = (0.4, 0.25, 3.0);
        let model = single(g, gp, w);
        for k in [-10.0, 2.5, 3.0, 3.1, 50.0] {
            let t = transmission_det(&model, k, Mode::Markov).unwrap();
            let expected = c(k - w, gp - g) / c(k - w, gp + g);
            assert!((t - expected).norm() < 1e-13 * expected.norm().max(1.0));
        }
    }

    #[test]
    fn resonance_value() {
        let (g, gp) = (0.3, 0.6);
        let model = single(g, gp, 1.0);
        let t = transmission_det(&model, 1.0, Mode::Markov).unwrap();
        assert!((t - c((gp - g) / (gp + g), 0.0)).norm() < 1e-14);
        let sol = scattering_solve(&model, 1.0, Mode::Markov).unwrap();
        let v = (2.0 * g).sqrt();
        assert!((sol.amplitudes[0] - c(0.0, -v / (g + gp))).norm() < 1e-14);
        assert!((sol.transmission - t).norm() < 1e-14);
    }

    #[test]
    fn decoupled_channel_transmits_fully() {
        let atoms = vec![Atom::new(0.0, c(0.0, 0.0)), Atom::new(0.3, c(0.0, 0.0))];
        let cfg = EnsembleConfig::new(1.0, atoms).unwrap();
        let res = ReservoirCoupling::independent(&[0.2, 0.1]).unwrap();
        let model = build_spin_model(&cfg, &res, None).unwrap();
        for k in [-1.0, 0.9, 1.0, 4.0] {
            assert_eq!(transmission_det(&model, k, Mode::Markov).unwrap(), c(1.0, 0.0));
            let sol = scattering_solve(&model, k, Mode::Exact).unwrap();
            assert_eq!(sol.amplitudes, CVector::zeros(2));
            assert_eq!(sol.transmission, c(1.0, 0.0));
        }
    }

    #[test]
    fn pole_on_grid_is_reported() {
        // no reservoir, decoupled: Mtot has the real eigenvalue ω_eg
        let cfg = EnsembleConfig::new(2.0, vec![Atom::new(0.0, c(0.0, 0.0))]).unwrap();
        let model = build_spin_model(&cfg, &ReservoirCoupling::zero(1), None).unwrap();
        assert!(matches!(transmission_det(&model, 2.0, Mode::Markov), Err(Error::PoleOnGrid { .. })));
        assert!(matches!(scattering_solve(&model, 2.0, Mode::Markov), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn product_rejects_defective() {
        let jordan = CMatrix::from_row_slice(2, 2, &[c(0.0, -1.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)]);
        let d = crate::spectral::eigendecompose(&jordan).unwrap();
        assert!(matches!(transmission_product(&d, &d, 0.0), Err(Error::Defective { .. })));
    }

    #[test]
    fn product_tends_to_one() {
        let model = single(0.4, 0.2, 0.0);
        let m = crate::spectral::eigendecompose(model.m()).unwrap();
        let mt = crate::spectral::eigendecompose(model.m_tot()).unwrap();
        for k in [1e8, -1e8] {
            assert!((transmission_product(&m, &mt, k).unwrap() - 1.0).norm() < 1e-8);
        }
    }

    #[test]
    fn mode_parses() {
        assert_eq!("markov".parse::<Mode>().unwrap(), Mode::Markov);
        assert_eq!("EXACT".parse::<Mode>().unwrap(), Mode::Exact);
        assert!("fast".parse::<Mode>().is_err());
    }
}
