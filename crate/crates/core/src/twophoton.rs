//! Two-photon output and `g²(τ)` of a single emitter driven on resonance
//! by a weak coherent state.
//!
//! Centre-of-mass variables: `E = k₁ + k₂`, `q = (k₁ − k₂)/2` for the input
//! pair, primed for the output pair; `R` and `r` are the conjugate
//! centre-of-mass and relative coordinates. `Θ(0) = 1/2` as everywhere else.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, I};
use crate::quadrature;
use crate::scattering::{transmission_det, Mode};
use crate::spinmodel::{build_spin_model, heaviside, preset_single_atom};

/// Relative width of the `Γ' = Γ` ridge on which `g²` is reported divergent.
pub const DIVERGENCE_RTOL: f64 = 1e-12;
/// Symmetric window `(−Q, Q)` of the numeric `q'` integral, in units of `Γtot`.
pub const QUADRATURE_WINDOW: f64 = 200.0;
/// Absolute tolerance of each numeric integral.
pub const QUADRATURE_ABS_TOL: f64 = 1e-8;
const POLE_TOL: f64 = 1e-14;

/// Channel decay `Γ`, reservoir decay `Γ'` and transition frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleAtomParams {
    gamma: f64,
    gamma_prime: f64,
    omega_eg: f64,
}

impl SingleAtomParams {
    pub fn new(gamma: f64, gamma_prime: f64, omega_eg: f64) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("gamma_prime", gamma_prime)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::NegativeRate { name, value: v });
            }
        }
        if !(gamma + gamma_prime > 0.0) {
            return Err(Error::InvalidParameter("total decay rate must be positive".into()));
        }
        if !omega_eg.is_finite() {
            return Err(Error::InvalidParameter(format!("omega_eg = {omega_eg} is not finite")));
        }
        Ok(Self { gamma, gamma_prime, omega_eg })
    }

    /// `Γ = ratio·Γtot`, `Γ' = (1 − ratio)·Γtot`.
    pub fn from_ratio(ratio: f64, gamma_tot: f64, omega_eg: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(Error::InvalidParameter(format!("gamma ratio {ratio} outside [0, 1]")));
        }
        Self::new(ratio * gamma_tot, (1.0 - ratio) * gamma_tot, omega_eg)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_prime(&self) -> f64 {
        self.gamma_prime
    }

    pub fn omega_eg(&self) -> f64 {
        self.omega_eg
    }

    pub fn gamma_tot(&self) -> f64 {
        self.gamma + self.gamma_prime
    }

    /// `t` at `k = ω_eg`: `(Γ' − Γ)/Γtot`.
    pub fn resonant_transmission(&self) -> f64 {
        (self.gamma_prime - self.gamma) / self.gamma_tot()
    }

    pub fn is_divergent(&self) -> bool {
        (self.gamma_prime - self.gamma).abs() < DIVERGENCE_RTOL * self.gamma_tot()
    }
}

/// Connected part of the two-photon S-matrix,
/// `T = −(16Γ²/π²) D / ([4q² − D²][4q'² − D²])`, `D = E − 2ω_eg + 2iΓtot`.
/// Energy conservation makes it independent of `E'`.
pub fn t_matrix(_e_out: f64, q_out: f64, e_in: f64, q_in: f64, params: &SingleAtomParams) -> Result<Complex64> {
    let d = c(e_in - 2.0 * params.omega_eg, 2.0 * params.gamma_tot());
    let d2 = d * d;
    let den_in = 4.0 * q_in * q_in - d2;
    let den_out = 4.0 * q_out * q_out - d2;
    if den_in.norm() < POLE_TOL || den_out.norm() < POLE_TOL {
        return Err(Error::PoleHit);
    }
    let g = params.gamma;
    Ok(-(16.0 * g * g / (PI * PI)) * d / (den_in * den_out))
}

/// Closed-form resonant two-photon output `ψ²(r, R)`.
pub fn psi2_closed(r: f64, big_r: f64, params: &SingleAtomParams) -> Complex64 {
    let (g, gp, gt) = (params.gamma, params.gamma_prime, params.gamma_tot());
    let free = (gp - g).powi(2) / (PI * gt * gt);
    let bound = 4.0 * g * g / (PI * gt * gt) * ((gt * r).exp() * heaviside(-r) + (-gt * r).exp() * heaviside(r));
    c(free - bound, 0.0) * Complex64::from_polar(1.0, 2.0 * params.omega_eg * big_r)
}

/// `ψ²(r, R = 0)` from the Fourier transform of the S-matrix.
///
/// The disconnected delta terms are integrated in closed form using the
/// single-photon `t` at `ω_eg` (evaluated from the spin model); the
/// T-matrix term is integrated numerically over `q'`: adaptively on
/// `[0, Q]` and as a cycle-summed cosine integral beyond.
/// The transform carries the `1/(2π)` prefactor of a two-dimensional
/// Fourier integral.
pub fn psi2_numeric(r: f64, params: &SingleAtomParams) -> Result<Complex64> {
    let (cfg, res) = preset_single_atom(params.gamma, params.gamma_prime, params.omega_eg)?;
    let model = build_spin_model(&cfg, &res, None)?;
    let t = transmission_det(&model, params.omega_eg, Mode::Markov)?;

    let prefactor = 1.0 / (2.0 * PI);
    // t_{E/2+q} t_{E/2-q} [δ(q−q') + δ(q+q')] at q = 0
    let disconnected = prefactor * t * t * 2.0;

    let e = 2.0 * params.omega_eg;
    let integrand = |qp: f64| t_matrix(e, qp, e, 0.0, params).unwrap_or(c(f64::NAN, f64::NAN));
    let q_max = QUADRATURE_WINDOW * params.gamma_tot();
    let inner = quadrature::integrate(|q| integrand(q) * (q * r).cos(), 0.0, q_max, QUADRATURE_ABS_TOL, 0.0, 4096)?;
    let tail = quadrature::integrate_cos_tail(integrand, q_max, r, QUADRATURE_ABS_TOL)?;
    // T is even in q', so ∫ e^{iq'r} T dq' = 2 ∫_0^∞ cos(q'r) T dq'
    let fourier = 2.0 * (inner.value + tail.value);
    let connected = prefactor * (-4.0 * PI * I) * fourier;
    Ok(disconnected + connected)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `|ψ²(τ)|²/|t|⁴` literally; tends to `1/π²` at large delay.
    PaperRaw,
    /// Rescaled so that `g²(∞) = 1`.
    AsymptoticUnit,
}

impl Normalization {
    fn factor(self) -> f64 {
        match self {
            Self::PaperRaw => 1.0,
            Self::AsymptoticUnit => PI * PI,
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper_raw" => Ok(Self::PaperRaw),
            "asymptotic_unit" => Ok(Self::AsymptoticUnit),
            other => Err(Error::InvalidParameter(format!("unknown normalization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoPhotonCorrelation {
    pub tau_grid: Vec<f64>,
    /// `f64::INFINITY` marks the divergent ridge.
    pub g2_values: Vec<f64>,
    pub psi2_values: Vec<Complex64>,
    /// `|ψ²|²`, finite even where `g²` diverges.
    pub abs_psi2_sq: Vec<f64>,
    pub normalization: Normalization,
    pub params: SingleAtomParams,
}

impl TwoPhotonCorrelation {
    pub fn divergent(&self) -> bool {
        self.params.is_divergent()
    }
}

/// `g²(τ) = |ψ²(τ)|²/|t|⁴` with the chosen normalization.
pub fn g2(tau_grid: &[f64], params: &SingleAtomParams, normalization: Normalization) -> TwoPhotonCorrelation {
    let t4 = params.resonant_transmission().powi(4);
    let divergent = params.is_divergent();
    let psi2_values: Vec<Complex64> = tau_grid.iter().map(|&tau| psi2_closed(tau, 0.0, params)).collect();
    let abs_psi2_sq: Vec<f64> = psi2_values.iter().map(|p| p.norm_sqr()).collect();
    let g2_values = abs_psi2_sq
        .iter()
        .map(|&p| if divergent { f64::INFINITY } else { normalization.factor() * p / t4 })
        .collect();
    TwoPhotonCorrelation {
        tau_grid: tau_grid.to_vec(),
        g2_values,
        psi2_values,
        abs_psi2_sq,
        normalization,
        params: *params,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(g: f64, gp: f64) -> SingleAtomParams {
        SingleAtomParams::new(g, gp, 3.0).unwrap()
    }

    #[test]
    fn t_matrix_vanishes_without_channel() {
        assert_eq!(t_matrix(6.0, 0.3, 6.0, 0.1, &p(0.0, 1.0)).unwrap(), Complex64::default());
    }

    #[test]
    fn t_matrix_symmetric_point() {
        let params = p(0.3, 0.5);
        let gt = params.gamma_tot();
        let d = c(0.0, 2.0 * gt);
        let expected = -(16.0 * 0.09 / (PI * PI)) * d / ((-(d * d)) * (-(d * d)));
        let t = t_matrix(6.0, 0.0, 6.0, 0.0, &params).unwrap();
        assert!((t - expected).norm() < 1e-15);
        assert!((t - c(0.0, -2.0 * 0.09 / (PI * PI * gt.powi(3)))).norm() < 1e-15);
    }

    #[test]
    fn t_matrix_decays_in_q() {
        let params = p(0.5, 0.5);
        assert!(t_matrix(6.0, 1e6, 6.0, 0.0, &params).unwrap().norm() < 1e-12);
    }

    #[test]
    fn psi2_limits() {
        let params = p(0.2, 0.8);
        let far = psi2_closed(80.0, 0.0, &params);
        let t = params.resonant_transmission();
        assert!((far - c(t * t / PI, 0.0)).norm() < 1e-15);

        let lossless = p(1.0, 0.0);
        assert!((psi2_closed(0.0, 0.0, &lossless) * PI - c(-3.0, 0.0)).norm() < 1e-14);

        let ridge = p(0.5, 0.5);
        let v = psi2_closed(0.7, 0.0, &ridge);
        assert!((v - c(-(4.0 * 0.25) / PI * (-0.7f64).exp(), 0.0)).norm() < 1e-15);
        assert!(v.norm() > 0.0);
    }

    #[test]
    fn psi2_centre_of_mass_phase() {
        let params = p(0.3, 0.1);
        let a = psi2_closed(0.4, 0.0, &params);
        let b = psi2_closed(0.4, 1.3, &params);
        assert!((b - a * Complex64::from_polar(1.0, 2.0 * 3.0 * 1.3)).norm() < 1e-15);
    }

    #[test]
    fn g2_ridge_diverges() {
        let out = g2(&[-1.0, 0.0, 2.0], &SingleAtomParams::from_ratio(0.5, 1.0, 0.0).unwrap(), Normalization::AsymptoticUnit);
        assert!(out.g2_values.iter().all(|g| g.is_infinite()));
        assert!(out.abs_psi2_sq.iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn g2_lossless_zero_delay() {
        let out = g2(&[0.0], &p(1.0, 0.0), Normalization::AsymptoticUnit);
        assert!((out.g2_values[0] - 9.0).abs() < 1e-12);
        let raw = g2(&[0.0, 60.0], &p(1.0, 0.0), Normalization::PaperRaw);
        assert!((raw.g2_values[1] - 1.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn numeric_without_channel_is_free() {
        let params = p(0.0, 1.0);
        let v = psi2_numeric(0.5, &params).unwrap();
        assert!((v - c(1.0 / PI, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn numeric_matches_closed_form() {
        for (g, gp) in [(0.5, 0.5), (0.2, 0.8), (1.0, 0.0)] {
            for r in [0.0, 0.3, -1.2, 4.0] {
                let params = p(g, gp);
                let n = psi2_numeric(r, &params).unwrap();
                let cf = psi2_closed(r, 0.0, &params);
                assert!((n - cf).norm() < 1e-6, "Γ={g} r={r}: {n} vs {cf}");
            }
        }
    }

    #[test]
    fn params_validated() {
        assert!(SingleAtomParams::new(-0.1, 1.0, 0.0).is_err());
        assert!(SingleAtomParams::new(0.0, 0.0, 0.0).is_err());
        assert!(SingleAtomParams::from_ratio(1.5, 1.0, 0.0).is_err());
    }
}
