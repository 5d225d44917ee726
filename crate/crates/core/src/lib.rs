//! Fermi golden-rule rates for nonadiabatic transitions between two electronic
//! states coupled through nuclear-momentum (derivative-coupling) terms.
//!
//! The bath enters through three spectral densities: J (displacements),
//! J_D (squared derivative couplings) and J_F (their cross term). From them
//! follow the time correlation functions K(t), D(t) and F(t), and the rate
//!
//! ```text
//! k = ∫ dt e^{i(E₁−E₂+λ)t − K*(t)} { D(t) − F(t)² }   (ħ = 1)
//! ```
//!
//! Correlation functions come from one of three routes: exact sums over
//! discrete modes, Ohmic closed forms, or panel quadrature over broadened
//! spectral densities. [`fock_oracle`] checks the underlying single-mode trace
//! identities by brute force in a truncated Fock space.

pub mod correlations;
pub mod fock_oracle;
pub mod mode_data;
pub mod presets;
pub mod quadrature;
pub mod rate_engine;
pub mod spectral_density;
pub mod units;

pub use num_complex::Complex64;

pub use correlations::{
    CorrelationGrid, CorrelationModel, CorrelationSample, GridSpec, Route,
};
pub use mode_data::{Mode, ModeSet};
pub use rate_engine::{RateError, RateOptions, RateResult};
pub use spectral_density::{Channel, OhmicTerm, PeakTerm, SpectralTriple};
pub use units::{CothMode, EnergyUnit, EnergyValue, ThermalState};
