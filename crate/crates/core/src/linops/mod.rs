//! Exact linear optics: Fock configurations, permanents, multiphoton
//! scattering amplitudes and the states and unitaries the model is built from.
//!
//! Everything here is exact and exponential in the photon number. It is the
//! reference the fast paths in [`crate::model`] are checked against.

mod config;
mod fock;
mod matrix;
mod permanent;

pub use config::{enumerate_configs, multiplicity, ConfigSpace, ModeConfig, DEFAULT_CONFIG_CAP};
pub use fock::{
    apply_phase_layer, dft_input_amplitudes, evolve_superposition, scattering_amplitude,
    transition_probability, FockSuperposition,
};
pub use matrix::{dft_matrix, haar_random_unitary, ComplexMatrix};
pub(crate) use fock::dft_amplitude as fock_dft_amplitude;
pub use permanent::{permanent, permanent_with_cap, submatrix, DEFAULT_PERMANENT_CAP};
