//! Scaling-invariant route: design the width trajectory ρ(t) and the
//! transport path α(t) first, then read the trap off them.
//!
//! A harmonic trap whose frequency obeys ω²(t) = ω₀²/ρ⁴ − ρ̈/ρ (the Ermakov
//! relation) carries every eigenmode of the dynamical invariant
//!
//!   I = [ρ(p − mα̇) − mρ̇(x − α)]²/2m + ½mω₀²σ² + U(σ),  σ = (x − α)/ρ,
//!
//! through the drive without transitions: the mode populates the frame-scaled
//! amplitude ρ^{-1/2} χ_n(σ) with a quadratic gauge phase and the accumulated
//! Lewis-Riesenfeld phase on top. Flat-ended ρ pins the trap to the initial
//! and final frequencies exactly, so a polynomial ramp between ρ(0) = 1 and
//! ρ(t_f) = γ = √(ω₀/ω_f) is a complete shortcut recipe. The trap may pass
//! through ω² < 0 on the way; that is physical (a transient anti-trap), never
//! clamped.

use crate::domain::{
    eval_ramp, make_ramp, PhysicalParams, RampPolynomial, ScalarField, SpatialGrid, TimeGrid,
    WaveState,
};
use crate::error::{Error, Result};
use crate::numerics;
use crate::propagator::{imaginary_time_states, EigensolveOptions};
use crate::scalar::{real, Real};
use crate::spectral::SpectralWorkspace;
use num_complex::Complex;
use serde::Serialize;
use std::sync::Arc;

/// Quadrature stencil for the accumulated-phase integral.
const PHASE_STENCIL: usize = 8;

/// Designed width trajectory: ρ(t) = 1 + (γ - 1) P(t/t_f) with a ramp flat
/// enough at both ends that ρ̇ and ρ̈ vanish there.
#[derive(Debug, Clone)]
pub struct ScalingProfile<T> {
    omega_0: T,
    gamma: T,
    t_f: T,
    ramp: RampPolynomial<T>,
}

impl<T: Real> ScalingProfile<T> {
    /// Expansion (or compression) from trap frequency ω₀ to ω_f over t_f.
    /// `flatness` is the number of derivatives pinned to zero at each end;
    /// at least 2 keeps ρ̈ flat so the boundary frequencies come out exact.
    pub fn new(omega_0: T, omega_f: T, t_f: T, flatness: usize) -> Result<Self> {
        if omega_0 <= T::zero() || omega_f <= T::zero() {
            return Err(Error::InvalidArgument(
                "trap frequencies must be positive".into(),
            ));
        }
        if t_f <= T::zero() {
            return Err(Error::InvalidArgument("duration must be positive".into()));
        }
        if flatness < 2 {
            return Err(Error::InvalidArgument(
                "boundary flatness below 2 leaves ρ̈ nonzero at the ends".into(),
            ));
        }
        let gamma = (omega_0 / omega_f).sqrt();
        let ramp = make_ramp(2 * flatness + 1, flatness)?;
        Ok(ScalingProfile {
            omega_0,
            gamma,
            t_f,
            ramp,
        })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn t_f(&self) -> T {
        self.t_f
    }

    pub fn omega_0(&self) -> T {
        self.omega_0
    }

    pub fn rho(&self, t: T) -> Result<T> {
        Ok(T::one() + (self.gamma - T::one()) * eval_ramp(&self.ramp, t, self.t_f, 0)?)
    }

    pub fn rho_dot(&self, t: T) -> Result<T> {
        Ok((self.gamma - T::one()) * eval_ramp(&self.ramp, t, self.t_f, 1)?)
    }

    pub fn rho_ddot(&self, t: T) -> Result<T> {
        Ok((self.gamma - T::one()) * eval_ramp(&self.ramp, t, self.t_f, 2)?)
    }

    /// ω²(t) = ω₀²/ρ⁴ - ρ̈/ρ; negative excursions are reported as-is.
    pub fn omega_sq(&self, t: T) -> Result<T> {
        let rho = self.rho(t)?;
        let rho_ddot = self.rho_ddot(t)?;
        Ok(self.omega_0 * self.omega_0 / rho.powi(4) - rho_ddot / rho)
    }
}

/// Integrates the width equation ρ̈ + ω²(t)ρ = ω₀²/ρ³ as an initial-value
/// problem. Returns (ρ, ρ̇) at every knot of a uniform grid with `n_steps`
/// steps over [0, t_f].
pub fn solve_width_ivp<T: Real>(
    omega_sq: impl Fn(T) -> T,
    omega_0: T,
    rho_0: T,
    rho_dot_0: T,
    t_f: T,
    n_steps: usize,
) -> Result<Vec<[T; 2]>> {
    if n_steps == 0 {
        return Err(Error::StepSize("width integration needs steps".into()));
    }
    if rho_0 <= T::zero() {
        return Err(Error::InvalidArgument(
            "width must start positive".into(),
        ));
    }
    let w0_sq = omega_0 * omega_0;
    let dt = t_f / T::from_usize(n_steps).unwrap();
    let path = numerics::rk4_path(
        |t, y: &[T; 2]| [y[1], w0_sq / y[0].powi(3) - omega_sq(t) * y[0]],
        [rho_0, rho_dot_0],
        T::zero(),
        dt,
        n_steps,
    );
    if path.iter().any(|y| !y[0].is_finite() || y[0] <= T::zero()) {
        return Err(Error::StepSize(
            "width trajectory collapsed or diverged; refine the steps or the drive".into(),
        ));
    }
    Ok(path)
}

/// Integrates the transport equation α̈ + ω²(t)α = F(t)/m. Returns (α, α̇)
/// at every knot.
pub fn solve_transport_ivp<T: Real>(
    omega_sq: impl Fn(T) -> T,
    force: impl Fn(T) -> T,
    mass: T,
    alpha_0: T,
    alpha_dot_0: T,
    t_f: T,
    n_steps: usize,
) -> Result<Vec<[T; 2]>> {
    if n_steps == 0 {
        return Err(Error::StepSize("transport integration needs steps".into()));
    }
    let dt = t_f / T::from_usize(n_steps).unwrap();
    let path = numerics::rk4_path(
        |t, y: &[T; 2]| [y[1], force(t) / mass - omega_sq(t) * y[0]],
        [alpha_0, alpha_dot_0],
        T::zero(),
        dt,
        n_steps,
    );
    if path.iter().any(|y| !y[0].is_finite()) {
        return Err(Error::StepSize(
            "transport trajectory diverged; refine the steps or the drive".into(),
        ));
    }
    Ok(path)
}

/// Eigenmodes of the frame problem
/// [-ħ²/(2m) d²/dσ² + ½mω₀²σ² + U(σ)] χ_n = λ_n χ_n on a dedicated σ-grid.
#[derive(Debug, Clone)]
pub struct SigmaModes<T> {
    pub grid: Arc<SpatialGrid<T>>,
    /// (χ_n, λ_n) pairs, normalized, deterministically signed.
    pub modes: Vec<(ScalarField<T>, T)>,
}

impl<T: Real> SigmaModes<T> {
    /// χ_n interpolated at an arbitrary σ; zero outside the grid (the modes
    /// have died off long before the window edge).
    pub fn chi(&self, n: usize, sigma: T) -> T {
        let grid = &self.grid;
        let from_first = sigma - grid.x(0);
        let span = grid.dx() * T::from_usize(grid.len() - 1).unwrap();
        if from_first < T::zero() || from_first > span {
            return T::zero();
        }
        numerics::interpolate_uniform(&self.modes[n].0.values, grid.dx(), from_first, 8)
    }

    pub fn lambda(&self, n: usize) -> T {
        self.modes[n].1
    }
}

/// Solves the frame eigenproblem by imaginary-time relaxation with
/// deflation. `u_sigma` is the anharmonic part U(σ); pass |_| 0 for the pure
/// harmonic frame. Interactions are not supported here (the frame problem is
/// linear by construction), so `params.g` must be zero.
pub fn solve_sigma_modes<T: Real>(
    grid: &Arc<SpatialGrid<T>>,
    u_sigma: impl Fn(T) -> T,
    omega_0: T,
    params: &PhysicalParams<T>,
    n_modes: usize,
    opts: &EigensolveOptions<T>,
) -> Result<SigmaModes<T>> {
    if params.g != T::zero() {
        return Err(Error::InvalidArgument(
            "the frame eigenproblem is linear; solve it with g = 0".into(),
        ));
    }
    let half_m_w2 = real::<T>(0.5) * params.mass * omega_0 * omega_0;
    let v: Vec<T> = (0..grid.len())
        .map(|i| {
            let s = grid.x(i);
            half_m_w2 * s * s + u_sigma(s)
        })
        .collect();
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(
            "frame potential is not finite on the grid".into(),
        ));
    }
    let modes = imaginary_time_states(grid, &v, params, n_modes, opts)?;
    Ok(SigmaModes {
        grid: Arc::clone(grid),
        modes,
    })
}

/// Snapshot of the scaling frame at one instant, everything needed to place
/// a mode on the lab grid.
#[derive(Debug, Clone, Copy)]
pub struct ScalingFrame<T> {
    pub rho: T,
    pub rho_dot: T,
    pub alpha: T,
    pub alpha_dot: T,
    /// Accumulated mode phase α_n(t); zero at t = 0.
    pub phase: T,
}

impl<T: Real> ScalingFrame<T> {
    /// Rest frame: ρ = 1, everything else zero.
    pub fn rest() -> Self {
        ScalingFrame {
            rho: T::one(),
            rho_dot: T::zero(),
            alpha: T::zero(),
            alpha_dot: T::zero(),
            phase: T::zero(),
        }
    }
}

/// Places mode n on the lab grid at one instant:
/// ψ = ρ^{-1/2} χ_n(σ) exp{i[m(ρ̇x²/2ρ + (α̇ρ - αρ̇)x/ρ)/ħ + α_n]}.
pub fn assemble_mode<T: Real>(
    grid: &Arc<SpatialGrid<T>>,
    modes: &SigmaModes<T>,
    n: usize,
    frame: &ScalingFrame<T>,
    params: &PhysicalParams<T>,
    t: T,
) -> Result<WaveState<T>> {
    if n >= modes.modes.len() {
        return Err(Error::InvalidArgument(format!(
            "mode {n} not solved (have {})",
            modes.modes.len()
        )));
    }
    if frame.rho <= T::zero() {
        return Err(Error::InvalidArgument("frame width must be positive".into()));
    }
    let half = real::<T>(0.5);
    let m_over_h = params.mass / params.hbar;
    let inv_rho = T::one() / frame.rho;
    let drift = (frame.alpha_dot * frame.rho - frame.alpha * frame.rho_dot) * inv_rho;
    let amp = inv_rho.sqrt();
    let psi: Vec<Complex<T>> = (0..grid.len())
        .map(|i| {
            let x = grid.x(i);
            let sigma = (x - frame.alpha) * inv_rho;
            let chi = modes.chi(n, sigma);
            let gauge =
                m_over_h * (half * frame.rho_dot * x * x * inv_rho + drift * x) + frame.phase;
            Complex::from_polar(amp * chi, gauge)
        })
        .collect();
    WaveState::new(Arc::clone(grid), psi, t)
}

/// Accumulated mode phase α_n(t) on the knots of `time`:
/// α_n = -(1/ħ) ∫₀ᵗ [λ_n/ρ² + (m/2ρ²)((α̇ρ - αρ̇)² - ω₀²α²/ρ²)] dt′.
/// The trajectory slices must be sampled on the same knots.
pub fn accumulated_phase<T: Real>(
    lambda_n: T,
    omega_0: T,
    width_path: &[[T; 2]],
    transport_path: &[[T; 2]],
    time: &TimeGrid<T>,
    params: &PhysicalParams<T>,
) -> Result<Vec<T>> {
    let n = time.n_slices();
    if width_path.len() != n || transport_path.len() != n {
        return Err(Error::GridMismatch(format!(
            "trajectory slices ({} width, {} transport) must match the {} time knots",
            width_path.len(),
            transport_path.len(),
            n
        )));
    }
    let half = real::<T>(0.5);
    let w0_sq = omega_0 * omega_0;
    let integrand: Vec<T> = (0..n)
        .map(|k| {
            let [rho, rho_dot] = width_path[k];
            let [alpha, alpha_dot] = transport_path[k];
            let inv_rho_sq = T::one() / (rho * rho);
            let drift = alpha_dot * rho - alpha * rho_dot;
            lambda_n * inv_rho_sq
                + half * params.mass * (drift * drift - w0_sq * alpha * alpha * inv_rho_sq)
                    * inv_rho_sq
        })
        .collect();
    let cum = numerics::cumulative_integral_uniform(&integrand, time.dt(), PHASE_STENCIL);
    Ok(cum.iter().map(|&c| -c / params.hbar).collect())
}

/// Instantaneous eigenenergy of mode n while the frame is flat
/// (ρ̇ = ρ̈ = 0, no transport): E = λ_n/ρ².
pub fn mode_energy_flat<T: Real>(lambda_n: T, rho: T) -> T {
    lambda_n / (rho * rho)
}

/// Expectation of the dynamical invariant in an arbitrary state. Constant in
/// time under the matching drive, and equal to λ_n on mode n in any frame.
pub fn invariant_expectation<T: Real>(
    state: &WaveState<T>,
    frame: &ScalingFrame<T>,
    u_sigma: impl Fn(T) -> T,
    omega_0: T,
    params: &PhysicalParams<T>,
) -> T {
    let grid = state.grid();
    let ws = SpectralWorkspace::new(grid);
    let dpsi = ws.derivative_complex(&state.psi, 1);
    let half = real::<T>(0.5);
    let half_m_w2 = half * params.mass * omega_0 * omega_0;
    let inv_rho = T::one() / frame.rho;
    let mut kin = T::zero();
    let mut pot = T::zero();
    for i in 0..grid.len() {
        let x = grid.x(i);
        let psi = state.psi[i];
        // A ψ with A = ρ(p - mα̇) - mρ̇(x - α)
        let p_psi = Complex::new(T::zero(), -params.hbar) * dpsi[i];
        let a_psi = (p_psi - psi.scale(params.mass * frame.alpha_dot)).scale(frame.rho)
            - psi.scale(params.mass * frame.rho_dot * (x - frame.alpha));
        kin = kin + a_psi.norm_sqr();
        let sigma = (x - frame.alpha) * inv_rho;
        pot = pot + (half_m_w2 * sigma * sigma + u_sigma(sigma)) * psi.norm_sqr();
    }
    let dx = grid.dx();
    kin * dx / (real::<T>(2.0) * params.mass) + pot * dx
}

/// Which way the final trap curves in the quartic redesign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalCurvature {
    /// Target ends on an inverted (expelling) quadratic, -ω_f²x²m/2.
    Inverted,
    /// Target ends on an ordinary confining quadratic, +ω_f²x²m/2.
    Confining,
}

/// Formal complex endpoint values quoted when no real trajectory exists:
/// the principal root ρ(t_f) of the negative fourth power and the matching
/// η(t_f) = η₀/ρ(t_f)⁶, each as (re, im).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FormalComplexValues<T> {
    pub rho_tf: (T, T),
    pub eta_tf: (T, T),
}

/// Outcome of asking the scaling construction for a quartic-trap shortcut:
/// with V = ½mω²(t)x² + η(t)x⁴ the frame demands η(t) = η₀/ρ⁶ and pins
/// ρ(t_f)⁴ = ±(ω₀/ω_f)², so an inverted final curvature asks for a negative
/// fourth power and no real trajectory exists. The formal complex width and
/// final quartic strength are reported for that case.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport<T> {
    pub omega_0: T,
    pub omega_f: T,
    pub eta_0: T,
    pub curvature: FinalCurvature,
    pub feasible: bool,
    /// Required ρ(t_f)⁴, sign and all.
    pub rho_tf_fourth_power: T,
    /// Real final width when feasible.
    pub rho_tf: Option<T>,
    /// Real final quartic strength η(t_f) = η₀/ρ(t_f)⁶ when feasible.
    pub eta_tf: Option<T>,
    /// Complex stand-ins when not.
    pub formal_complex_values: Option<FormalComplexValues<T>>,
    /// Human-readable verdict.
    pub message: String,
}

/// Decides whether a quadratic-in-momentum invariant (Lewis-Leach family)
/// can carry a quartic trap ½mω²(t)x² + η(t)x⁴ to the requested final
/// curvature. Infeasibility is a successful outcome, not an error.
pub fn check_ll_feasibility_quartic<T: Real>(
    omega_0: T,
    omega_f: T,
    eta_0: T,
    curvature: FinalCurvature,
) -> Result<FeasibilityReport<T>> {
    if omega_0 <= T::zero() || omega_f <= T::zero() {
        return Err(Error::InvalidArgument(
            "trap frequencies must be positive".into(),
        ));
    }
    let ratio_sq = (omega_0 / omega_f) * (omega_0 / omega_f);
    match curvature {
        FinalCurvature::Confining => {
            let rho_tf = (omega_0 / omega_f).sqrt();
            let eta_tf = eta_0 / rho_tf.powi(6);
            Ok(FeasibilityReport {
                omega_0,
                omega_f,
                eta_0,
                curvature,
                feasible: true,
                rho_tf_fourth_power: ratio_sq,
                rho_tf: Some(rho_tf),
                eta_tf: Some(eta_tf),
                formal_complex_values: None,
                message: format!(
                    "feasible: rho(t_f)^4 = +(omega_0/omega_f)^2 has the real \
                     root rho(t_f) = {:.6}, with eta(t_f) = eta_0/rho^6",
                    rho_tf.to_f64().unwrap_or(f64::NAN)
                ),
            })
        }
        FinalCurvature::Inverted => {
            // ρ⁴ = -(ω₀/ω_f)²: principal fourth root of the negative number,
            // ρ = (ω₀/ω_f)^{1/2} e^{iπ/4}
            let mag = (omega_0 / omega_f).sqrt();
            let rho = Complex::from_polar(mag, T::FRAC_PI_4());
            let eta = Complex::from_polar(eta_0, T::zero()) / rho.powu(6);
            Ok(FeasibilityReport {
                omega_0,
                omega_f,
                eta_0,
                curvature,
                feasible: false,
                rho_tf_fourth_power: -ratio_sq,
                rho_tf: None,
                eta_tf: None,
                formal_complex_values: Some(FormalComplexValues {
                    rho_tf: (rho.re, rho.im),
                    eta_tf: (eta.re, eta.im),
                }),
                message: format!(
                    "infeasible: the scaling frame demands rho(t_f)^4 = \
                     -(omega_0/omega_f)^2 = {:.6} < 0, and a real width has \
                     no negative fourth power; only the formal complex root \
                     exists",
                    (-ratio_sq).to_f64().unwrap_or(f64::NAN)
                ),
            })
        }
    }
}
