use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::I;
use crate::spinmodel::heaviside;

/// Which side of the real axis a real frequency is approached from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `ω + i0`
    Retarded,
    /// `ω − i0`
    Advanced,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Self::Retarded => 1.0,
            Self::Advanced => -1.0,
        }
    }
}

/// Free chiral propagator `G_ω(z) = −η i Θ(η z) exp(iωz)`, `η = sign Im ω`.
pub fn propagator(omega: Complex64, z: f64) -> Result<Complex64> {
    if omega.im == 0.0 || omega.im.is_nan() {
        return Err(Error::OnRealAxis { omega: omega.re });
    }
    Ok(with_sign(omega.im.signum(), omega, z))
}

/// `G_{ω ± i0}(z)` for real `ω`, branch given explicitly.
pub fn propagator_on_axis(omega: f64, branch: Branch, z: f64) -> Complex64 {
    with_sign(branch.sign(), Complex64::new(omega, 0.0), z)
}

fn with_sign(eta: f64, omega: Complex64, z: f64) -> Complex64 {
    let theta = heaviside(eta * z);
    if theta == 0.0 {
        return Complex64::default();
    }
    -I * eta * theta * (I * omega * z).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn upper_half_plane() {
        let g = propagator(c(0.0, 1.0), 1.0).unwrap();
        assert!((g - c(0.0, -(-1f64).exp())).norm() < 1e-15);
    }

    #[test]
    fn lower_half_plane_vanishes_downstream() {
        assert_eq!(propagator(c(0.0, -1.0), 1.0).unwrap(), Complex64::default());
    }

    #[test]
    fn advanced_branch_upstream() {
        let (w, z) = (2.3, -0.7);
        let g = propagator_on_axis(w, Branch::Advanced, z);
        assert!((g - I * (I * w * z).exp()).norm() < 1e-15);
        assert_eq!(propagator_on_axis(w, Branch::Retarded, z), Complex64::default());
    }

    #[test]
    fn origin_uses_half_step() {
        let g = propagator_on_axis(1.0, Branch::Retarded, 0.0);
        assert!((g - c(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn real_axis_rejected() {
        assert_eq!(propagator(c(1.5, 0.0), 1.0), Err(Error::OnRealAxis { omega: 1.5 }));
    }
}
