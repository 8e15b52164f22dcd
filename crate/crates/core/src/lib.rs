//! Two-photon Rabi oscillations in a three-mode Kerr resonator.
//!
//! The crate integrates the Lindblad master equation for three cavity modes
//! coupled by the four-wave-mixing term `u a1† a2† a0² + h.c.` on a
//! truncated Fock space, extracts occupations, zero-delay pair correlations
//! and Fock probabilities, and carries the closed-form solutions used to
//! check the integrator. [`fitkit`] fits occupation traces to a
//! two-harmonic damped model.
//!
//! Units: `u = 1`; rates in `u`, times in `1/u`.

pub mod analytic;
pub mod density;
mod error;
pub mod evolve;
pub mod fitkit;
pub mod fock;
pub mod liouvillian;
pub mod model;
pub mod observables;

pub use analytic::{
    closed_form_occupations, closed_form_probabilities, perturbative_occupation, rabi_frequency,
    two_photon_eigensystem,
};
pub use density::{Charge, DensityMatrix, SectorLayout};
pub use error::{Error, Result};
pub use evolve::{
    evolve, evolve_observed, make_fock_state, uniform_grid, vacuum, EvolveOptions, Snapshot,
    Trajectory,
};
pub use fitkit::{
    detrend, fit_series, fit_two_harmonics, spectral_peak, Detrended, FitOptions, FitResult,
    Harmonic,
};
pub use fock::{
    annihilation, build_basis, creation, number_operator, FockBasis, Mode, Occupations,
    SparseOperator,
};
pub use model::{
    build_hamiltonian_parts, lindblad_rhs, HamiltonianParts, ModelSpec, PulseEnvelope, PulseShape,
    PumpScheme,
};
pub use observables::{fock_probability, g2_zero_delay, occupation, ObservableRecord};
