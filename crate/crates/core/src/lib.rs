//! Single-photon dissipative bound states for two-level emitters chirally
//! coupled to a one-dimensional photonic channel.
//!
//! The crate builds the effective spin matrices of an emitter ensemble
//! ([`spinmodel`]), classifies their spectra into bound states and
//! transmission zeros ([`spectral`]), computes transmission coefficients,
//! wavefunctions and the Levinson winding number ([`scattering`]), and the
//! two-photon correlation function of a single emitter ([`twophoton`]).
//! The [`cli`] module drives all of it from a JSON run description.
//!
//! Units: `c = 1`, all frequencies, rates and inverse lengths share one
//! user-chosen unit.

// `!(x > 0.0)` style guards are meant to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod scattering;
pub mod spectral;
pub mod spinmodel;
pub mod twophoton;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use num_complex::Complex64;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
