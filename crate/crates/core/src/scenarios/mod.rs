//! End-to-end trap engineering scenarios.
//!
//! Each submodule wires the generic machinery (phase solver, potential
//! builder, invariant frame, propagator) into one physically complete run:
//! harmonic expansion, wavefunction splitting, and the quartic-trap
//! feasibility check. These are the entry points the command line calls.

pub mod expansion;
pub mod families;
pub mod quartic;
pub mod splitting;

pub use expansion::{run_expansion, ExpansionConfig, ExpansionOutcome};
pub use families::{hermite_gauss, hermite_gauss_d1, HermiteMode};
pub use quartic::{run_quartic_check, QuarticConfig, QuarticOutcome};
pub use splitting::{
    run_splitting, run_splitting_pair, SplitInterpolation, SplittingConfig, SplittingOutcome,
};

