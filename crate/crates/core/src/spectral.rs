//! Biorthogonal eigen-analysis of `M` and `Mtot` and classification of the
//! spectrum of `M` into bound states, transmission zeros and bound states
//! in the continuum.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::spinmodel::{PresetFamily, SpinModel};

/// Eigenvector-matrix condition number beyond which a matrix is reported
/// as non-diagonalizable.
pub const DEFECT_CONDITION_LIMIT: f64 = 1e8;

/// Right and left eigenpairs with `L^H R = 1`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<Complex64>,
    right: CMatrix,
    left: CMatrix,
    diagonalizable: bool,
    defect_measure: f64,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Columns are right eigenvectors `e_α`, unit norm, largest entry real positive.
    pub fn right_vectors(&self) -> &CMatrix {
        &self.right
    }

    /// Columns are left eigenvectors `ē_α` (`M^H ē_α = E_α* ē_α`),
    /// scaled so that `ē_α^H e_β = δ_αβ`.
    pub fn left_vectors(&self) -> &CMatrix {
        &self.left
    }

    pub fn diagonalizable(&self) -> bool {
        self.diagonalizable
    }

    /// Smallest over largest singular value of the right-eigenvector matrix.
    pub fn defect_measure(&self) -> f64 {
        self.defect_measure
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `‖M e_α − E_α e_α‖`.
    pub fn residual(&self, matrix: &CMatrix, alpha: usize) -> f64 {
        let v = self.right.column(alpha);
        (matrix * v - v * self.eigenvalues[alpha]).norm()
    }

    /// `‖M^H ē_α − E_α* ē_α‖`.
    pub fn left_residual(&self, matrix: &CMatrix, alpha: usize) -> f64 {
        let v = self.left.column(alpha);
        (matrix.adjoint() * v - v * self.eigenvalues[alpha].conj()).norm()
    }

    /// Largest entry of `|L^H R − 1|`.
    pub fn biorthogonality_error(&self) -> f64 {
        let n = self.len();
        linalg::max_abs(&(self.left.adjoint() * &self.right - CMatrix::identity(n, n)))
    }

    /// Largest entry of `|Σ_α e_α ē_α^H − 1|`.
    pub fn completeness_error(&self) -> f64 {
        let n = self.len();
        linalg::max_abs(&(&self.right * self.left.adjoint() - CMatrix::identity(n, n)))
    }
}

/// Eigendecomposition through the complex Schur form. Eigenvectors of the
/// triangular factor are obtained by back-substitution; the left vectors
/// are the rows of the inverse right-eigenvector matrix.
pub fn eigendecompose(matrix: &CMatrix) -> Result<SpectralDecomposition> {
    let n = matrix.nrows();
    if n == 0 || matrix.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n.max(1), found: matrix.ncols() });
    }
    if !linalg::is_finite(matrix) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let (q, t) = linalg::schur(matrix)?;
    let small = (f64::EPSILON * t.norm()).max(f64::MIN_POSITIVE);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (t[(a, a)], t[(b, b)]);
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });

    let mut right = CMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        let lambda = t[(k, k)];
        let mut y = CVector::zeros(n);
        y[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let s: Complex64 = (i + 1..=k).map(|j| t[(i, j)] * y[j]).sum();
            let mut d = t[(i, i)] - lambda;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            y[i] = -s / d;
        }
        let mut x = &q * y;
        normalize_phase(&mut x);
        right.set_column(col, &x);
        eigenvalues.push(lambda);
    }

    let sv = right.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let defect_measure = if smax > 0.0 { smin / smax } else { 0.0 };
    let diagonalizable = defect_measure * DEFECT_CONDITION_LIMIT >= 1.0;
    let left = match right.clone().try_inverse() {
        Some(inv) => inv.adjoint(),
        None => CMatrix::zeros(n, n),
    };
    Ok(SpectralDecomposition { eigenvalues, right, left, diagonalizable, defect_measure })
}

fn normalize_phase(x: &mut CVector) {
    let norm = x.norm();
    if norm == 0.0 {
        return;
    }
    let pivot = x.iter().copied().fold(Complex64::default(), |best, z| if z.norm() > best.norm() * (1.0 + 1e-12) { z } else { best });
    let phase = pivot.conj() / pivot.norm();
    *x *= phase / norm;
}

/// Classification thresholds, in absolute units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `|Im E| ≤ tol_real` counts as on the real axis.
    pub tol_real: f64,
    /// Distance below which an eigenvalue of `M` matches one of `Mtot`.
    pub tol_match: f64,
}

impl Tolerances {
    pub const REAL_RTOL: f64 = 1e-9;
    pub const MATCH_RTOL: f64 = 1e-7;

    /// Defaults scaled by the Frobenius norm of `M`.
    pub fn for_matrix(m: &CMatrix) -> Self {
        let scale = m.norm().max(f64::MIN_POSITIVE);
        Self { tol_real: Self::REAL_RTOL * scale, tol_match: Self::MATCH_RTOL * scale }
    }

    pub fn for_model(model: &SpinModel) -> Self {
        Self::for_matrix(model.m())
    }

    /// Replace either threshold when an override is given.
    pub fn with_overrides(self, tol_real: Option<f64>, tol_match: Option<f64>) -> Self {
        Self { tol_real: tol_real.unwrap_or(self.tol_real), tol_match: tol_match.unwrap_or(self.tol_match) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateClass {
    Bound,
    TransmissionZero,
    BicCandidate,
}

impl StateClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Bound => "BOUND",
            Self::TransmissionZero => "TRANSMISSION_ZERO",
            Self::BicCandidate => "BIC_CANDIDATE",
        }
    }
}

impl std::fmt::Display for StateClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct BoundStateEntry {
    pub energy: Complex64,
    pub right: CVector,
    pub left: CVector,
    pub class: StateClass,
}

#[derive(Debug, Clone)]
pub struct BoundStateSet {
    pub entries: Vec<BoundStateEntry>,
    /// Bound-state count: BOUND entries, plus BIC candidates when
    /// `count_bic` was requested.
    pub n_b: usize,
    pub count_bic: bool,
    /// Eigenvalues of `M` strictly above the real axis (not states).
    pub n_above: usize,
    /// Either decomposition was flagged non-diagonalizable.
    pub defective: bool,
    pub tolerances: Tolerances,
}

impl BoundStateSet {
    pub fn count(&self, class: StateClass) -> usize {
        self.entries.iter().filter(|e| e.class == class).count()
    }

    pub fn of_class(&self, class: StateClass) -> impl Iterator<Item = &BoundStateEntry> {
        self.entries.iter().filter(move |e| e.class == class)
    }

    /// Any state sitting on the real axis.
    pub fn has_real_states(&self) -> bool {
        self.entries.iter().any(|e| e.class != StateClass::Bound)
    }
}

/// Sorts the spectrum of `M` against that of `Mtot`.
pub fn classify(
    m_dec: &SpectralDecomposition,
    mtot_dec: &SpectralDecomposition,
    tolerances: Tolerances,
    count_bic: bool,
) -> Result<BoundStateSet> {
    if m_dec.len() != mtot_dec.len() {
        return Err(Error::DimensionMismatch { expected: m_dec.len(), found: mtot_dec.len() });
    }
    let mut entries = Vec::new();
    let mut n_above = 0;
    for (alpha, &e) in m_dec.eigenvalues().iter().enumerate() {
        let class = if e.im < -tolerances.tol_real {
            StateClass::Bound
        } else if e.im <= tolerances.tol_real {
            let matched = mtot_dec.eigenvalues().iter().any(|&et| (et - e).norm() <= tolerances.tol_match);
            if matched {
                StateClass::BicCandidate
            } else {
                StateClass::TransmissionZero
            }
        } else {
            n_above += 1;
            continue;
        };
        entries.push(BoundStateEntry {
            energy: e,
            right: m_dec.right_vectors().column(alpha).into_owned(),
            left: m_dec.left_vectors().column(alpha).into_owned(),
            class,
        });
    }
    let n_b = entries
        .iter()
        .filter(|e| e.class == StateClass::Bound || (count_bic && e.class == StateClass::BicCandidate))
        .count();
    Ok(BoundStateSet {
        entries,
        n_b,
        count_bic,
        n_above,
        defective: !(m_dec.diagonalizable() && mtot_dec.diagonalizable()),
        tolerances,
    })
}

/// Both decompositions and the classification of a spin model.
#[derive(Debug, Clone)]
pub struct SpectrumAnalysis {
    pub m: SpectralDecomposition,
    pub m_tot: SpectralDecomposition,
    pub states: BoundStateSet,
}

pub fn analyze(model: &SpinModel, tolerances: Tolerances, count_bic: bool) -> Result<SpectrumAnalysis> {
    let m = eigendecompose(model.m())?;
    let m_tot = eigendecompose(model.m_tot())?;
    let states = classify(&m, &m_tot, tolerances, count_bic)?;
    Ok(SpectrumAnalysis { m, m_tot, states })
}

/// Number of eigenvalues of `M` strictly below the real axis.
pub fn count_below_axis(m: &CMatrix) -> Result<usize> {
    Ok(linalg::eigenvalues(m)?.iter().filter(|e| e.im < 0.0).count())
}

/// A located crossing of an eigenvalue of `M` through the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub parameter: f64,
    /// Final bracket `[lo, hi]`, `hi − lo ≤ tol`.
    pub bracket: (f64, f64),
    /// Eigenvalue of `M` closest to the real axis at `parameter`.
    pub eigenvalue: Complex64,
    /// Counts below the axis at the original bracket ends.
    pub counts: (usize, usize),
}

/// Bisects `[lo, hi]` for a change of `count`, which must differ at the
/// two ends. Returns the final bracket.
pub fn bisect_count_change<F>(count: F, lo: f64, hi: f64, tol: f64) -> Result<((f64, f64), (usize, usize))>
where
    F: Fn(f64) -> Result<usize>,
{
    if !(tol > 0.0) || !(lo < hi) {
        return Err(Error::InvalidParameter(format!("bad bisection setup [{lo}, {hi}], tol {tol}")));
    }
    let (c_lo, c_hi) = (count(lo)?, count(hi)?);
    if c_lo == c_hi {
        return Err(Error::NoBracket { lo, hi, count: c_lo });
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if count(mid)? == c_lo {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(((a, b), (c_lo, c_hi)))
}

/// Ratio `Γ/Γtot` inside `bracket` at which an eigenvalue of `M` crosses
/// the real axis, located to `tol`.
pub fn bound_state_threshold(family: PresetFamily, bracket: (f64, f64), tol: f64) -> Result<Threshold> {
    let count = |r: f64| count_below_axis(family.spin_model(r)?.m());
    let ((a, b), counts) = bisect_count_change(count, bracket.0, bracket.1, tol)?;
    let parameter = 0.5 * (a + b);
    let eigenvalue = closest_to_axis(family.spin_model(parameter)?.m())?;
    Ok(Threshold { parameter, bracket: (a, b), eigenvalue, counts })
}

pub(crate) fn closest_to_axis(m: &CMatrix) -> Result<Complex64> {
    linalg::eigenvalues(m)?
        .into_iter()
        .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
        .ok_or(Error::ConvergenceFailure)
}
