//! Multiphoton linear-optical interference mapped onto generalized
//! `p`-body Hopfield spin Hamiltonians (`p = 2 * n_photons`).
//!
//! The crate is layered bottom-up:
//!
//! * [`linops`]: Fock configurations, permanents, scattering amplitudes,
//!   the DFT-prepared input state and Haar-random unitaries. This is the
//!   exact (exponential-cost) route and doubles as the oracle for the rest.
//! * [`model`]: the Hopfield Hamiltonian `H = -M Pr(Λ|σ)`, its coupling
//!   tensor, the `O(|Λ| M)` fully-bunched evaluation with incremental
//!   spin-flip updates, and the memory overlaps.
//! * [`dynamics`]: Metropolis single-spin-flip dynamics, exchange Monte
//!   Carlo over a temperature ladder, trajectories, self-correlation and
//!   the two noise models.
//! * [`analysis`]: Parisi overlap and memory-overlap distributions, phase
//!   labelling, `(α, T)` sweeps and finite-size studies.

pub mod analysis;
pub mod dynamics;
mod error;
pub mod linops;
pub mod model;
pub mod seed;
mod spin;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use spin::SpinConfig;
