#![allow(dead_code)]

use photon_bound::spinmodel::{build_spin_model, Atom, EnsembleConfig, ReservoirCoupling, SpinModel};
use photon_bound::{CMatrix, Complex64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_complex<R: Rng>(rng: &mut R, scale: f64) -> Complex64 {
    c(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| random_complex(rng, scale))
}

/// `K' = −i A^H A + H` with `H` Hermitian: dissipative by construction.
pub fn random_reservoir<R: Rng>(rng: &mut R, n: usize, loss: f64, coherent: f64) -> CMatrix {
    let a = random_matrix(rng, n, loss.sqrt());
    let h = random_matrix(rng, n, coherent);
    let herm = (&h + h.adjoint()) * c(0.5, 0.0);
    a.adjoint() * &a * c(0.0, -1.0) + herm
}

/// `n` atoms with random couplings placed within the Markov bound
/// `max Γ_i · L < 0.1`.
pub fn random_config(rng: &mut ChaCha8Rng, n: usize, omega_eg: f64) -> EnsembleConfig {
    let couplings: Vec<Complex64> = (0..n)
        .map(|_| Complex64::from_polar(rng.random_range(0.2..1.5), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    let max_gamma = couplings.iter().map(|v| v.norm_sqr() / 2.0).fold(0.0, f64::max);
    let length = 0.09 / max_gamma;
    let atoms = couplings.into_iter().map(|v| Atom::new(rng.random_range(0.0..length), v)).collect();
    EnsembleConfig::new(omega_eg, atoms).unwrap()
}

pub fn random_model(rng: &mut ChaCha8Rng, max_atoms: usize, omega_eg: f64) -> SpinModel {
    let n = rng.random_range(1..=max_atoms);
    let config = random_config(rng, n, omega_eg);
    let reservoir = ReservoirCoupling::new(random_reservoir(rng, n, 0.5, 0.5)).unwrap();
    build_spin_model(&config, &reservoir, None).unwrap()
}

/// Random ensemble with a purely coherent (Hermitian) reservoir coupling.
pub fn random_lossless_model(rng: &mut ChaCha8Rng, max_atoms: usize, omega_eg: f64) -> SpinModel {
    let n = rng.random_range(1..=max_atoms);
    let config = random_config(rng, n, omega_eg);
    let h = random_matrix(rng, n, 0.5);
    let reservoir = ReservoirCoupling::new((&h + h.adjoint()) * c(0.5, 0.0)).unwrap();
    build_spin_model(&config, &reservoir, None).unwrap()
}
