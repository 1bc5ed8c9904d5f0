//! Effective spin description of an emitter ensemble.
//!
//! The chiral channel induces the retarded coupling
//! `K_ij = −i V_i V_j* exp(iω(z_i − z_j)) Θ(z_i − z_j)`, and together with
//! the reservoir coupling `K'` it defines two matrices:
//!
//! * `M    = ω_eg·1 + K' + K^H` whose lower-half-plane eigenvalues are the
//!   bound-state energies,
//! * `Mtot = ω_eg·1 + K' + K`, the usual traced-out effective Hamiltonian.
//!
//! `Θ(0) = 1/2` everywhere, so the diagonal of `K` is `−i|V_i|²/2 = −iΓ_i`
//! and `K − K^H = −i v v^H` with `v_i = V_i exp(iω z_i)` holds exactly.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, I};

/// Markov figure of merit above which a warning is raised.
pub const MARKOV_WARNING_THRESHOLD: f64 = 0.1;

/// Relative tolerance of the dissipativity certificate.
pub const DISSIPATIVITY_RTOL: f64 = 1e-10;

/// One emitter: position along the channel and complex channel coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub coupling: Complex64,
}

impl Atom {
    pub fn new(position: f64, coupling: Complex64) -> Self {
        Self { position, coupling }
    }

    /// Decay rate into the channel, `Γ_i = |V_i|²/2`.
    pub fn channel_decay(&self) -> f64 {
        self.coupling.norm_sqr() / 2.0
    }
}

/// Unit-step with the symmetric convention `Θ(0) = 1/2`.
pub fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// The physical scene: transition frequency and an ordered list of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    omega_eg: f64,
    atoms: Vec<Atom>,
}

impl EnsembleConfig {
    pub fn new(omega_eg: f64, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidConfig("ensemble has no atoms".into()));
        }
        if !omega_eg.is_finite() {
            return Err(Error::InvalidConfig(format!("omega_eg = {omega_eg} is not finite")));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !a.position.is_finite() || !a.coupling.re.is_finite() || !a.coupling.im.is_finite() {
                return Err(Error::InvalidConfig(format!("atom {i} has non-finite position or coupling")));
            }
        }
        Ok(Self { omega_eg, atoms })
    }

    pub fn omega_eg(&self) -> f64 {
        self.omega_eg
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Ensemble length `z_max − z_min`.
    pub fn extent(&self) -> f64 {
        let (lo, hi) = self
            .atoms
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| (lo.min(a.position), hi.max(a.position)));
        hi - lo
    }

    /// `max_i Γ_i · (z_max − z_min)`; the Markov approximation needs this ≪ 1.
    pub fn markov_figure(&self) -> f64 {
        let gamma_max = self.atoms.iter().map(Atom::channel_decay).fold(0.0, f64::max);
        gamma_max * self.extent()
    }

    pub fn markov_warning(&self) -> Option<String> {
        let fom = self.markov_figure();
        (fom >= MARKOV_WARNING_THRESHOLD).then(|| {
            format!(
                "Markov figure of merit max(Γ)·L = {fom:.4} ≥ {MARKOV_WARNING_THRESHOLD}; \
                 the frequency-independent spin model may be inaccurate"
            )
        })
    }

    /// Drive vector `v_i = V_i exp(i k z_i)`.
    pub fn channel_vector(&self, k: f64) -> CVector {
        CVector::from_iterator(
            self.len(),
            self.atoms.iter().map(|a| a.coupling * Complex64::from_polar(1.0, k * a.position)),
        )
    }

    /// Same ensemble with atoms reordered so that new atom `i` is old atom `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: perm.len() });
        }
        let atoms = perm
            .iter()
            .map(|&p| self.atoms.get(p).copied())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidParameter("permutation index out of range".into()))?;
        Self::new(self.omega_eg, atoms)
    }
}

/// Reservoir-mediated coupling `K'`, guaranteed dissipative.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirCoupling {
    matrix: CMatrix,
}

impl ReservoirCoupling {
    /// Validates squareness, finiteness and the dissipativity certificate:
    /// every eigenvalue of `−i(K' − K'^H)` must be `≤ 1e-10·‖K'‖`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidConfig(format!(
                "reservoir matrix is {}x{}, not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !linalg::is_finite(&matrix) {
            return Err(Error::InvalidConfig("reservoir matrix has non-finite entries".into()));
        }
        let tolerance = DISSIPATIVITY_RTOL * matrix.norm();
        let worst = dissipation_spectrum(&matrix).last().copied().unwrap_or(0.0);
        if worst > tolerance {
            return Err(Error::NonDissipativeReservoir { eigenvalue: worst, tolerance });
        }
        Ok(Self { matrix })
    }

    /// Independent emitters, `K' = diag(−iγ'_i)`.
    pub fn independent(rates: &[f64]) -> Result<Self> {
        if let Some(&bad) = rates.iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::NegativeRate { name: "gamma_prime", value: bad });
        }
        let diag = CVector::from_iterator(rates.len(), rates.iter().map(|&g| c(0.0, -g)));
        Self::new(CMatrix::from_diagonal(&diag))
    }

    pub fn zero(n: usize) -> Self {
        Self { matrix: CMatrix::zeros(n, n) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// Eigenvalues of `−i(K' − K'^H)`, ascending. All are `≤ 0` for a
    /// dissipative coupling.
    pub fn dissipation_spectrum(&self) -> Vec<f64> {
        dissipation_spectrum(&self.matrix)
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        if perm.len() != n || perm.iter().any(|&p| p >= n) {
            return Err(Error::DimensionMismatch { expected: n, found: perm.len() });
        }
        Ok(Self { matrix: CMatrix::from_fn(n, n, |i, j| self.matrix[(perm[i], perm[j])]) })
    }
}

fn dissipation_spectrum(m: &CMatrix) -> Vec<f64> {
    let anti = (m - m.adjoint()) * (-I);
    linalg::hermitian_eigenvalues(&anti)
}

/// Channel-induced coupling in the Markov approximation (phases at `ω_eg`).
pub fn build_k(config: &EnsembleConfig) -> CMatrix {
    build_k_of_k(config, config.omega_eg)
}

/// Frequency-dependent channel coupling: the Markov form with `ω_eg`
/// replaced by `k` in the propagation phase.
pub fn build_k_of_k(config: &EnsembleConfig, k: f64) -> CMatrix {
    let atoms = config.atoms();
    let n = atoms.len();
    CMatrix::from_fn(n, n, |i, j| {
        let dz = atoms[i].position - atoms[j].position;
        let theta = heaviside(dz);
        if theta == 0.0 {
            return Complex64::default();
        }
        -I * atoms[i].coupling * atoms[j].coupling.conj() * Complex64::from_polar(theta, k * dz)
    })
}

/// All matrices of the effective spin description at one reference frequency.
#[derive(Debug, Clone)]
pub struct SpinModel {
    config: EnsembleConfig,
    reservoir: ReservoirCoupling,
    frequency: Option<f64>,
    k: CMatrix,
    m: CMatrix,
    m_tot: CMatrix,
    warnings: Vec<String>,
}

/// Builds `K`, `M` and `Mtot`. With `k = None` the Markov matrices are
/// produced; with `Some(k)` the propagation phases are evaluated at `k`.
pub fn build_spin_model(config: &EnsembleConfig, reservoir: &ReservoirCoupling, k: Option<f64>) -> Result<SpinModel> {
    if reservoir.len() != config.len() {
        return Err(Error::DimensionMismatch { expected: config.len(), found: reservoir.len() });
    }
    if let Some(k) = k {
        if !k.is_finite() {
            return Err(Error::InvalidParameter(format!("frequency {k} is not finite")));
        }
    }
    let (kmat, m, m_tot) = spin_matrices(config, reservoir, k.unwrap_or(config.omega_eg));
    let warnings: Vec<String> = config.markov_warning().into_iter().collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(SpinModel { config: config.clone(), reservoir: reservoir.clone(), frequency: k, k: kmat, m, m_tot, warnings })
}

fn spin_matrices(config: &EnsembleConfig, reservoir: &ReservoirCoupling, k: f64) -> (CMatrix, CMatrix, CMatrix) {
    let kmat = build_k_of_k(config, k);
    let n = config.len();
    let base = CMatrix::identity(n, n) * c(config.omega_eg, 0.0) + reservoir.matrix();
    let m = &base + kmat.adjoint();
    let m_tot = base + &kmat;
    (kmat, m, m_tot)
}

impl SpinModel {
    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    pub fn reservoir(&self) -> &ReservoirCoupling {
        &self.reservoir
    }

    pub fn len(&self) -> usize {
        self.config.len()
    }

    pub fn is_empty(&self) -> bool {
        self.config.is_empty()
    }

    /// `None` for the Markov model, `Some(k)` for a model frozen at `k`.
    pub fn frequency(&self) -> Option<f64> {
        self.frequency
    }

    /// Frequency at which the propagation phases of `K` are evaluated.
    pub fn reference_frequency(&self) -> f64 {
        self.frequency.unwrap_or(self.config.omega_eg)
    }

    /// Channel-induced coupling `K`.
    pub fn channel_coupling(&self) -> &CMatrix {
        &self.k
    }

    pub fn m(&self) -> &CMatrix {
        &self.m
    }

    pub fn m_tot(&self) -> &CMatrix {
        &self.m_tot
    }

    /// `v` at the reference frequency; `M − Mtot = i v v^H`.
    pub fn channel_vector(&self) -> CVector {
        self.config.channel_vector(self.reference_frequency())
    }

    /// `(M(k), Mtot(k))` rebuilt with propagation phases at `k`.
    pub fn matrices_at(&self, k: f64) -> (CMatrix, CMatrix) {
        let (_, m, m_tot) = spin_matrices(&self.config, &self.reservoir, k);
        (m, m_tot)
    }

    /// Markov-validity warnings raised while building.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Single atom at `z = 0` with `V = √(2Γ)` and `K' = [−iΓ']`.
pub fn preset_single_atom(gamma: f64, gamma_prime: f64, omega_eg: f64) -> Result<(EnsembleConfig, ReservoirCoupling)> {
    check_rate("gamma", gamma)?;
    check_rate("gamma_prime", gamma_prime)?;
    let config = EnsembleConfig::new(omega_eg, vec![Atom::new(0.0, c((2.0 * gamma).sqrt(), 0.0))])?;
    Ok((config, ReservoirCoupling::independent(&[gamma_prime])?))
}

/// Two atoms a distance `2π/ω_eg` apart with equal couplings `V = √(2Γ)`
/// and `K' = Γ'[[−i, −1], [−1, −i]]`.
///
/// The downstream atom is listed first so that `K = Γ[[−i, −2i], [0, −i]]`.
pub fn preset_two_atom(gamma: f64, gamma_prime: f64, omega_eg: f64) -> Result<(EnsembleConfig, ReservoirCoupling)> {
    if !(omega_eg > 0.0) || !omega_eg.is_finite() {
        return Err(Error::InvalidParameter(format!("two-atom preset needs omega_eg > 0, got {omega_eg}")));
    }
    preset_two_atom_with_separation(gamma, gamma_prime, omega_eg, TAU / omega_eg)
}

/// [`preset_two_atom`] with an explicit separation.
pub fn preset_two_atom_with_separation(
    gamma: f64,
    gamma_prime: f64,
    omega_eg: f64,
    separation: f64,
) -> Result<(EnsembleConfig, ReservoirCoupling)> {
    check_rate("gamma", gamma)?;
    check_rate("gamma_prime", gamma_prime)?;
    if !(separation >= 0.0) || !separation.is_finite() {
        return Err(Error::InvalidParameter(format!("separation must be finite and >= 0, got {separation}")));
    }
    let v = c((2.0 * gamma).sqrt(), 0.0);
    let config = EnsembleConfig::new(omega_eg, vec![Atom::new(separation, v), Atom::new(0.0, v)])?;
    let g = gamma_prime;
    let kp = CMatrix::from_row_slice(2, 2, &[c(0.0, -g), c(-g, 0.0), c(-g, 0.0), c(0.0, -g)]);
    Ok((config, ReservoirCoupling::new(kp)?))
}

fn check_rate(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeRate { name, value })
    }
}

/// One-parameter preset families indexed by `Γ/Γtot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PresetFamily {
    SingleAtom { omega_eg: f64, gamma_tot: f64 },
    TwoAtom { omega_eg: f64, gamma_tot: f64 },
}

impl PresetFamily {
    pub fn gamma_tot(&self) -> f64 {
        match *self {
            Self::SingleAtom { gamma_tot, .. } | Self::TwoAtom { gamma_tot, .. } => gamma_tot,
        }
    }

    /// Ensemble and reservoir at `Γ = ratio·Γtot`, `Γ' = (1 − ratio)·Γtot`.
    pub fn build(&self, ratio: f64) -> Result<(EnsembleConfig, ReservoirCoupling)> {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(Error::InvalidParameter(format!("gamma ratio {ratio} outside [0, 1]")));
        }
        let gt = self.gamma_tot();
        let (gamma, gamma_prime) = (ratio * gt, (1.0 - ratio) * gt);
        match *self {
            Self::SingleAtom { omega_eg, .. } => preset_single_atom(gamma, gamma_prime, omega_eg),
            Self::TwoAtom { omega_eg, .. } => preset_two_atom(gamma, gamma_prime, omega_eg),
        }
    }

    pub fn spin_model(&self, ratio: f64) -> Result<SpinModel> {
        let (config, reservoir) = self.build(ratio)?;
        build_spin_model(&config, &reservoir, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn single_atom_k_is_minus_i_gamma() {
        let gamma = 0.37;
        let (cfg, _) = preset_single_atom(gamma, 0.0, 5.0).unwrap();
        let k = build_k(&cfg);
        assert!((k[(0, 0)] - c(0.0, -gamma)).norm() < 1e-15);
        // zero separation: no k dependence
        for kk in [-3.0, 0.0, 11.0] {
            assert_eq!(build_k_of_k(&cfg, kk), k);
        }
    }

    #[test]
    fn two_atom_k_matches_printed_matrix() {
        let gamma = 0.2;
        let (cfg, res) = preset_two_atom(gamma, 0.8, 3.0).unwrap();
        let k = build_k(&cfg);
        let expected = CMatrix::from_row_slice(2, 2, &[c(0.0, -1.0), c(0.0, -2.0), c(0.0, 0.0), c(0.0, -1.0)]) * c(gamma, 0.0);
        assert!(close(&k, &expected, 1e-13), "{k}");
        assert!((k[(0, 1)] - c(0.0, -0.4)).norm() < 1e-13);
        assert_eq!(res.matrix()[(0, 1)], c(-0.8, 0.0));
    }

    #[test]
    fn half_frequency_flips_off_diagonal_phase() {
        let gamma = 0.3;
        let omega = 4.0;
        let (cfg, _) = preset_two_atom(gamma, 0.1, omega).unwrap();
        let k = build_k_of_k(&cfg, omega / 2.0);
        assert!((k[(0, 1)] - c(0.0, 2.0 * gamma)).norm() < 1e-13);
        assert_eq!(build_k_of_k(&cfg, omega), build_k(&cfg));
    }

    #[test]
    fn decoupled_channel_gives_zero_k() {
        let atoms = vec![Atom::new(0.0, c(0.0, 0.0)), Atom::new(1.3, c(0.0, 0.0))];
        let cfg = EnsembleConfig::new(2.0, atoms).unwrap();
        assert_eq!(build_k(&cfg), CMatrix::zeros(2, 2));
        let model = build_spin_model(&cfg, &ReservoirCoupling::zero(2), None).unwrap();
        assert_eq!(model.m(), model.m_tot());
        assert_eq!(model.m(), &(CMatrix::identity(2, 2) * c(2.0, 0.0)));
    }

    #[test]
    fn single_atom_spin_matrices() {
        let (g, gp, w) = (0.3, 0.9, 7.0);
        let (cfg, res) = preset_single_atom(g, gp, w).unwrap();
        let model = build_spin_model(&cfg, &res, None).unwrap();
        assert!((model.m()[(0, 0)] - c(w, g - gp)).norm() < 1e-14);
        assert!((model.m_tot()[(0, 0)] - c(w, -g - gp)).norm() < 1e-14);
    }

    #[test]
    fn two_atom_m_matches_hand_arithmetic() {
        let (g, gp, w) = (0.2, 0.8, 2.5);
        let (cfg, res) = preset_two_atom(g, gp, w).unwrap();
        let model = build_spin_model(&cfg, &res, None).unwrap();
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[c(w, g - gp), c(-gp, 0.0), c(-gp, 2.0 * g), c(w, g - gp)],
        );
        assert!(close(model.m(), &expected, 1e-13), "{}", model.m());
    }

    #[test]
    fn presets_validate_rates() {
        assert_eq!(preset_single_atom(-1.0, 0.0, 1.0).unwrap_err(), Error::NegativeRate { name: "gamma", value: -1.0 });
        assert!(matches!(preset_two_atom(0.1, -0.2, 1.0), Err(Error::NegativeRate { name: "gamma_prime", .. })));
        assert!(matches!(preset_two_atom(0.1, 0.2, 0.0), Err(Error::InvalidParameter(_))));
        let (cfg, res) = preset_single_atom(1.0, 0.0, 0.0).unwrap();
        assert!((cfg.atoms()[0].coupling.re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(res.matrix()[(0, 0)], c(0.0, -0.0));
        let (cfg, _) = preset_single_atom(0.0, 1.0, 0.0).unwrap();
        assert_eq!(build_k(&cfg)[(0, 0)], Complex64::default());
    }

    #[test]
    fn non_dissipative_reservoir_rejected() {
        let bad = CMatrix::from_element(1, 1, c(0.0, 1.0));
        assert!(matches!(ReservoirCoupling::new(bad), Err(Error::NonDissipativeReservoir { .. })));
        let hermitian = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.2), c(0.5, -0.2), c(-1.0, 0.0)]);
        assert!(ReservoirCoupling::new(hermitian).is_ok());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (cfg, _) = preset_single_atom(1.0, 0.0, 0.0).unwrap();
        let res = ReservoirCoupling::zero(2);
        assert_eq!(
            build_spin_model(&cfg, &res, None).unwrap_err(),
            Error::DimensionMismatch { expected: 1, found: 2 }
        );
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(EnsembleConfig::new(1.0, vec![]).is_err());
        assert!(EnsembleConfig::new(f64::NAN, vec![Atom::new(0.0, c(1.0, 0.0))]).is_err());
        assert!(EnsembleConfig::new(1.0, vec![Atom::new(f64::INFINITY, c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn markov_warning_threshold() {
        let atoms = vec![Atom::new(0.0, c(1.0, 0.0)), Atom::new(0.1, c(1.0, 0.0))];
        let cfg = EnsembleConfig::new(1.0, atoms).unwrap();
        assert!((cfg.markov_figure() - 0.05).abs() < 1e-15);
        assert!(cfg.markov_warning().is_none());
        let atoms = vec![Atom::new(0.0, c(1.0, 0.0)), Atom::new(0.2, c(1.0, 0.0))];
        let cfg = EnsembleConfig::new(1.0, atoms).unwrap();
        assert!(cfg.markov_warning().is_some());
        let model = build_spin_model(&cfg, &ReservoirCoupling::zero(2), None).unwrap();
        assert_eq!(model.warnings().len(), 1);
    }

    #[test]
    fn coincident_atoms_use_half_step() {
        let atoms = vec![Atom::new(0.5, c(1.0, 0.0)), Atom::new(0.5, c(0.0, 2.0))];
        let cfg = EnsembleConfig::new(3.0, atoms).unwrap();
        let k = build_k(&cfg);
        let v = cfg.channel_vector(3.0);
        let diff = &k - k.adjoint() + (&v * v.adjoint()) * I;
        assert!(diff.norm() < 1e-14);
    }
}
