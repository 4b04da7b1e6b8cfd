//! Feasibility screening for quartic-trap shortcuts under the scaling route.
//!
//! The scaling construction carries an eigenstate of V = ½mω₀²x² + η₀x⁴
//! through a width trajectory ρ(t), but it transports the quartic strength
//! rigidly as η(t) = η₀/ρ⁶(t) and pins the final width by
//! ρ(t_f)⁴ = ±(ω₀/ω_f)², with the sign set by the curvature of the target
//! trap. A confining target keeps the right-hand side positive and the
//! protocol goes through; an inverted target demands a negative fourth power
//! of a real width, which no trajectory can satisfy. This module packages
//! that screening for both target curvatures into one serializable verdict.

use serde::Serialize;

use crate::error::Result;
use crate::invariants::{check_ll_feasibility_quartic, FeasibilityReport, FinalCurvature};
use crate::scalar::{real, Real};

/// Parameters of the quartic screening run.
#[derive(Debug, Clone, Serialize)]
pub struct QuarticConfig<T> {
    pub omega_0: T,
    pub omega_f: T,
    /// Initial quartic strength; only its scaling matters for feasibility.
    pub eta_0: T,
}

impl<T: Real> QuarticConfig<T> {
    /// Tenfold frequency reduction with a modest quartic term.
    pub fn reference() -> Self {
        QuarticConfig {
            omega_0: T::one(),
            omega_f: real::<T>(0.1),
            eta_0: real::<T>(0.05),
        }
    }
}

/// Both curvature cases of the screening, plus a prose verdict.
#[derive(Debug, Clone, Serialize)]
pub struct QuarticOutcome<T> {
    pub config: QuarticConfig<T>,
    pub inverted: FeasibilityReport<T>,
    pub confining: FeasibilityReport<T>,
    pub explanation: String,
}

/// Screens a quartic-trap shortcut against both final curvatures.
pub fn run_quartic_check<T: Real>(config: &QuarticConfig<T>) -> Result<QuarticOutcome<T>> {
    let inverted = check_ll_feasibility_quartic(
        config.omega_0,
        config.omega_f,
        config.eta_0,
        FinalCurvature::Inverted,
    )?;
    let confining = check_ll_feasibility_quartic(
        config.omega_0,
        config.omega_f,
        config.eta_0,
        FinalCurvature::Confining,
    )?;

    let ratio = inverted.rho_tf_fourth_power;
    let explanation = format!(
        "The scaling route rescales the quartic strength rigidly with the \
         width, eta(t) = eta_0 / rho(t)^6, and fixes the final width by \
         rho(t_f)^4 = -(omega_0/omega_f)^2 = {ratio:.6} when the target trap \
         curves downward. A real width cannot have a negative fourth power, \
         so no real trajectory reaches an inverted quartic target; the same \
         construction with an upward-curving target needs rho(t_f)^4 = \
         +(omega_0/omega_f)^2 and succeeds.",
        ratio = ratio.to_f64().unwrap_or(f64::NAN),
    );

    Ok(QuarticOutcome {
        config: config.clone(),
        inverted,
        confining,
        explanation,
    })
}
