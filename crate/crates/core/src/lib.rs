//! Inverse engineering of time-dependent trapping potentials.
//!
//! Given a prescribed density history r(x,t) (or a scaling profile of a known
//! eigenstate family), the crate reconstructs the phase that makes r e^{i phi}
//! an exact solution of the time-dependent (nonlinear) Schrödinger equation
//! with a *real* local potential, assembles that potential, and verifies the
//! construction by direct split-step propagation. Two synthesis routes are
//! implemented and cross-checked against each other:
//!
//! * a fast-forward route: auxiliary phase theta from the scaling parameter,
//!   drive schedule R(t), and additive corrections on top of the stationary
//!   base potential;
//! * an invariant route: Ermakov scaling rho(t) and Newton transport alpha(t)
//!   with Lewis-Riesenfeld modes built on the scaled coordinate.
//!
//! Everything is generic over the scalar type via [`Real`]; concrete `f64`
//! aliases live at the crate root. Internals work in natural units
//! (hbar = m = 1, energies in units of hbar*omega0); SI conversion belongs to
//! the caller, see [`domain::UnitScales`].

pub mod domain;
pub mod error;
pub mod invariants;
pub mod numerics;
pub mod phase_solver;
pub mod potential_builder;
pub mod propagator;
pub mod scalar;
pub mod scenarios;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{real, Real};

/// `f64` aliases for the main domain types.
pub type Grid64 = domain::SpatialGrid<f64>;
pub type TimeGrid64 = domain::TimeGrid<f64>;
pub type Field64 = domain::ScalarField<f64>;
pub type Wave64 = domain::WaveState<f64>;
pub type Params64 = domain::PhysicalParams<f64>;
pub type Ramp64 = domain::RampPolynomial<f64>;
pub type PhaseField64 = phase_solver::PhaseField<f64>;
pub type PotentialMovie64 = potential_builder::PotentialMovie<f64>;
