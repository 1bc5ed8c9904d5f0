//! Single-photon scattering: transmission coefficient by three routes,
//! scattering and bound-state wavefunctions, transmission zeros and the
//! winding-number form of Levinson's theorem.

mod propagator;
mod transmission;
mod wavefunction;
mod winding;

pub use propagator::{propagator, propagator_on_axis, Branch};
pub use transmission::{
    find_transmission_zeros, scattering_solve, transmission_det, transmission_product, Mode, ScatteringSolution,
    Transmission, POLE_TOL,
};
pub use wavefunction::{bound_wavefunction, scattering_wavefunction, Side, WavefunctionKind, WavefunctionSample};
pub use winding::{
    default_k_span, sample_trace, verify_levinson, winding_number, LevinsonCheck, TransmissionTrace, WindingOptions,
};
