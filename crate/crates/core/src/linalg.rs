//! Thin helpers over `nalgebra` for the dense complex matrices used
//! throughout the crate.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

const SCHUR_MAX_ITER: usize = 10_000;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `k·1 − m`.
pub(crate) fn shifted(m: &CMatrix, k: f64) -> CMatrix {
    let mut out = -m.clone();
    for i in 0..m.nrows() {
        out[(i, i)] += k;
    }
    out
}

/// Complex Schur form `m = Q T Q^H` with `T` upper triangular.
pub(crate) fn schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .map(Schur::unpack)
        .ok_or(Error::ConvergenceFailure)
}

/// Eigenvalues only, in Schur order.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let (_, t) = schur(m)?;
    Ok(t.diagonal().iter().copied().collect())
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let herm = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
