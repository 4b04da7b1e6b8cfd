//! Direct propagation under an engineered potential movie, the verification
//! arm of the inverse construction.
//!
//! The workhorse is a Strang-split spectral scheme: half a potential kick
//! (movie linearly interpolated to the substep midpoint, plus the
//! instantaneous g|ψ|² term), one exact free-particle step in k-space, half a
//! kick again. Norm is *measured*, never restored: its drift is one of the
//! verification observables. A Crank-Nicolson integrator with 3-point spatial
//! differences provides an independent cross-check, and the same split
//! machinery run in imaginary time (with deflation and Richardson polish)
//! doubles as the grid eigensolver for stationary and scaled-coordinate
//! modes.

use crate::domain::{PhysicalParams, ScalarField, SpatialGrid, WaveState};
use crate::error::{Error, Result};
use crate::potential_builder::PotentialMovie;
use crate::scalar::{real, Real};
use crate::spectral::SpectralWorkspace;
use num_complex::Complex;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    SplitStep,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Dirichlet walls at the window edges; Crank-Nicolson only.
    HardWall,
}

#[derive(Debug, Clone)]
pub struct PropagationConfig<T> {
    pub scheme: Scheme,
    pub boundary: Boundary,
    /// Micro-steps per movie interval.
    pub substeps: usize,
    /// Largest tolerated |ψ|² near the window edge, relative to the peak;
    /// beyond this the window is too small and the run aborts.
    pub edge_density_tol: T,
}

impl<T: Real> Default for PropagationConfig<T> {
    fn default() -> Self {
        PropagationConfig {
            scheme: Scheme::SplitStep,
            boundary: Boundary::Periodic,
            substeps: 1,
            edge_density_tol: real::<T>(1e-8),
        }
    }
}

/// Optional per-knot measurement callbacks.
pub struct ObservableHooks<'a, T> {
    /// Normalized reference state at knot k; enables the fidelity series
    /// |<ref_k|ψ>|².
    pub reference: Option<&'a dyn Fn(usize) -> Vec<Complex<T>>>,
    /// Arbitrary scalar expectation at knot k (e.g. a dynamical invariant).
    pub invariant: Option<&'a dyn Fn(usize, &[Complex<T>]) -> T>,
}

impl<T> ObservableHooks<'_, T> {
    pub fn none() -> Self {
        ObservableHooks {
            reference: None,
            invariant: None,
        }
    }
}

/// Observables sampled at every movie knot.
#[derive(Debug, Clone)]
pub struct ObservableSeries<T> {
    pub times: Vec<T>,
    pub norm: Vec<T>,
    /// <T> + <V(t_k)> + (g/2)∫|ψ|⁴: the energy functional, whose interaction
    /// term carries g/2 (unlike the chemical potential's full g).
    pub energy: Vec<T>,
    pub fidelity: Option<Vec<T>>,
    pub invariant: Option<Vec<T>>,
    pub max_edge_density: T,
}

/// Squared overlap |<a|b>|² of two states on the same grid, insensitive to
/// their norms.
pub fn fidelity<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    assert_eq!(a.len(), b.len());
    let mut ov = Complex::new(T::zero(), T::zero());
    let mut na = T::zero();
    let mut nb = T::zero();
    for (x, y) in a.iter().zip(b) {
        ov += x.conj() * *y;
        na = na + x.norm_sqr();
        nb = nb + y.norm_sqr();
    }
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    ov.norm_sqr() / (na * nb)
}

/// L2 residual ‖Hψ - Eψ‖ with spectral kinetics,
/// H = -ħ²/(2m) ∂² + V + g|ψ|². ψ should be normalized.
pub fn eigen_residual<T: Real>(
    grid: &SpatialGrid<T>,
    psi: &[Complex<T>],
    v: &[T],
    energy: T,
    params: &PhysicalParams<T>,
) -> T {
    assert!(psi.len() == grid.len() && v.len() == grid.len());
    let ws = SpectralWorkspace::new(grid);
    let d2 = ws.derivative_complex(psi, 2);
    let half_h2m = real::<T>(0.5) * params.hbar * params.hbar / params.mass;
    let res2: T = psi
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let h_psi = -d2[i].scale(half_h2m)
                + p.scale(v[i] + params.g * p.norm_sqr());
            (h_psi - p.scale(energy)).norm_sqr()
        })
        .sum();
    (res2 * grid.dx()).sqrt()
}

fn edge_density<T: Real>(psi: &[Complex<T>]) -> T {
    let n = psi.len();
    let peak = psi.iter().fold(T::zero(), |m, c| m.max(c.norm_sqr()));
    if peak == T::zero() {
        return T::zero();
    }
    let band = 4.min(n / 2);
    let mut worst = T::zero();
    for i in 0..band {
        worst = worst.max(psi[i].norm_sqr()).max(psi[n - 1 - i].norm_sqr());
    }
    worst / peak
}

/// Propagates `psi0` from t = 0 to t_f under the movie, measuring
/// observables at every knot. Fails if the state ever piles up against the
/// window edge beyond the configured tolerance.
pub fn propagate<T: Real>(
    movie: &PotentialMovie<T>,
    psi0: &WaveState<T>,
    params: &PhysicalParams<T>,
    config: &PropagationConfig<T>,
    hooks: ObservableHooks<'_, T>,
) -> Result<(WaveState<T>, ObservableSeries<T>)> {
    if psi0.grid() != movie.grid() {
        return Err(Error::GridMismatch(
            "initial state and movie live on different grids".into(),
        ));
    }
    if config.substeps == 0 {
        return Err(Error::StepSize("substeps must be at least 1".into()));
    }
    if config.scheme == Scheme::SplitStep && config.boundary == Boundary::HardWall {
        return Err(Error::InvalidArgument(
            "hard walls need the Crank-Nicolson scheme; the spectral step is periodic".into(),
        ));
    }
    let grid = movie.grid();
    let n = grid.len();
    let time = movie.time();
    let n_knots = time.n_slices();
    let dt_movie = time.dt();
    let dt = dt_movie / T::from_usize(config.substeps).unwrap();
    let ws = SpectralWorkspace::new(grid);

    let mut psi = psi0.psi.clone();
    let mut series = ObservableSeries {
        times: Vec::with_capacity(n_knots),
        norm: Vec::with_capacity(n_knots),
        energy: Vec::with_capacity(n_knots),
        fidelity: hooks.reference.map(|_| Vec::with_capacity(n_knots)),
        invariant: hooks.invariant.map(|_| Vec::with_capacity(n_knots)),
        max_edge_density: T::zero(),
    };

    let record = |k: usize,
                  psi: &[Complex<T>],
                  series: &mut ObservableSeries<T>|
     -> Result<()> {
        series.times.push(time.time(k));
        let norm2: T = psi.iter().map(|c| c.norm_sqr()).sum::<T>() * grid.dx();
        series.norm.push(norm2.sqrt());
        let kin = ws.kinetic_expectation(psi, grid.dx(), params.hbar, params.mass);
        let v_k = movie.slice(k);
        let half = real::<T>(0.5);
        let pot: T = psi
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let d = c.norm_sqr();
                (v_k[i] + half * params.g * d) * d
            })
            .sum::<T>()
            * grid.dx();
        series.energy.push(kin + pot);
        if let (Some(f), Some(series_f)) = (hooks.reference, series.fidelity.as_mut()) {
            series_f.push(fidelity(&f(k), psi));
        }
        if let (Some(h), Some(series_i)) = (hooks.invariant, series.invariant.as_mut()) {
            series_i.push(h(k, psi));
        }
        let edge = edge_density(psi);
        if edge > series.max_edge_density {
            series.max_edge_density = edge;
        }
        if edge > config.edge_density_tol {
            return Err(Error::Truncation(format!(
                "density reached {:?} of the peak at the window edge (knot {k}); widen the window",
                edge
            )));
        }
        Ok(())
    };

    record(0, &psi, &mut series)?;

    let half = real::<T>(0.5);
    let kin_coeff = -params.hbar * dt / (real::<T>(2.0) * params.mass);
    let mut v_mid = vec![T::zero(); n];
    for k in 0..n_knots - 1 {
        let v_lo = movie.slice(k);
        let v_hi = movie.slice(k + 1);
        for j in 0..config.substeps {
            let s = (T::from_usize(j).unwrap() + half) / T::from_usize(config.substeps).unwrap();
            for i in 0..n {
                v_mid[i] = v_lo[i] + s * (v_hi[i] - v_lo[i]);
            }
            match config.scheme {
                Scheme::SplitStep => {
                    half_potential_kick(&mut psi, &v_mid, params, dt * half);
                    ws.apply_k_phase(&mut psi, kin_coeff);
                    half_potential_kick(&mut psi, &v_mid, params, dt * half);
                }
                Scheme::CrankNicolson => {
                    cn_step(&mut psi, &v_mid, grid, params, dt, config.boundary)?;
                }
            }
        }
        record(k + 1, &psi, &mut series)?;
    }

    let final_state = WaveState::new(Arc::clone(grid), psi, time.t_f())?;
    Ok((final_state, series))
}

fn half_potential_kick<T: Real>(
    psi: &mut [Complex<T>],
    v: &[T],
    params: &PhysicalParams<T>,
    dt_half: T,
) {
    let scale = -dt_half / params.hbar;
    for (c, &vi) in psi.iter_mut().zip(v) {
        let phase = scale * (vi + params.g * c.norm_sqr());
        *c *= Complex::from_polar(T::one(), phase);
    }
}

/// One Crank-Nicolson step with 3-point kinetics:
/// (1 + i dt H/2ħ) ψ⁺ = (1 - i dt H/2ħ) ψ, nonlinearity frozen at the
/// current density.
fn cn_step<T: Real>(
    psi: &mut [Complex<T>],
    v: &[T],
    grid: &SpatialGrid<T>,
    params: &PhysicalParams<T>,
    dt: T,
    boundary: Boundary,
) -> Result<()> {
    let n = psi.len();
    let dx = grid.dx();
    let kappa = params.hbar * params.hbar / (real::<T>(2.0) * params.mass * dx * dx);
    let lam = Complex::new(T::zero(), dt / (real::<T>(2.0) * params.hbar));

    // H diag_i = 2κ + V_i + g|ψ_i|², off-diag = -κ
    let diag_h: Vec<T> = (0..n)
        .map(|i| real::<T>(2.0) * kappa + v[i] + params.g * psi[i].norm_sqr())
        .collect();
    let off_h = -kappa;

    // RHS = (1 - λH) ψ
    let mut rhs = vec![Complex::new(T::zero(), T::zero()); n];
    for i in 0..n {
        let left = if i > 0 {
            psi[i - 1]
        } else {
            match boundary {
                Boundary::Periodic => psi[n - 1],
                Boundary::HardWall => Complex::new(T::zero(), T::zero()),
            }
        };
        let right = if i + 1 < n {
            psi[i + 1]
        } else {
            match boundary {
                Boundary::Periodic => psi[0],
                Boundary::HardWall => Complex::new(T::zero(), T::zero()),
            }
        };
        let h_psi = (left + right).scale(off_h) + psi[i].scale(diag_h[i]);
        rhs[i] = psi[i] - lam * h_psi;
    }

    // LHS tridiagonal: diag 1 + λ diag_h, off λ off_h (with periodic corners)
    let a_off = lam.scale(off_h);
    let diag: Vec<Complex<T>> = diag_h
        .iter()
        .map(|&d| Complex::new(T::one(), T::zero()) + lam.scale(d))
        .collect();

    let sol = match boundary {
        Boundary::HardWall => solve_tridiag(&diag, a_off, a_off, &rhs)?,
        Boundary::Periodic => solve_cyclic_tridiag(&diag, a_off, a_off, &rhs)?,
    };
    psi.copy_from_slice(&sol);
    Ok(())
}

/// Thomas algorithm for constant off-diagonals.
fn solve_tridiag<T: Real>(
    diag: &[Complex<T>],
    sub: Complex<T>,
    sup: Complex<T>,
    rhs: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    let n = diag.len();
    let mut c_star = vec![Complex::new(T::zero(), T::zero()); n];
    let mut d_star = vec![Complex::new(T::zero(), T::zero()); n];
    let mut denom = diag[0];
    if denom.norm_sqr() == T::zero() {
        return Err(Error::InvalidArgument("singular tridiagonal system".into()));
    }
    c_star[0] = sup / denom;
    d_star[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub * c_star[i - 1];
        if denom.norm_sqr() == T::zero() {
            return Err(Error::InvalidArgument("singular tridiagonal system".into()));
        }
        c_star[i] = sup / denom;
        d_star[i] = (rhs[i] - sub * d_star[i - 1]) / denom;
    }
    let mut x = d_star;
    for i in (0..n - 1).rev() {
        let upd = x[i] - c_star[i] * x[i + 1];
        x[i] = upd;
    }
    Ok(x)
}

/// Cyclic tridiagonal solve by the rank-one (Sherman-Morrison) correction.
fn solve_cyclic_tridiag<T: Real>(
    diag: &[Complex<T>],
    sub: Complex<T>,
    sup: Complex<T>,
    rhs: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    let n = diag.len();
    assert!(n >= 3);
    // corners: A[0][n-1] = sub, A[n-1][0] = sup
    let gamma = -diag[0];
    let mut diag_mod = diag.to_vec();
    diag_mod[0] = diag[0] - gamma;
    diag_mod[n - 1] = diag[n - 1] - (sup * sub) / gamma;
    let y = solve_tridiag(&diag_mod, sub, sup, rhs)?;
    let mut u = vec![Complex::new(T::zero(), T::zero()); n];
    u[0] = gamma;
    u[n - 1] = sup;
    let q = solve_tridiag(&diag_mod, sub, sup, &u)?;
    // v = (1, 0, ..., 0, sub/gamma)
    let vy = y[0] + (sub / gamma) * y[n - 1];
    let vq = Complex::new(T::one(), T::zero()) + q[0] + (sub / gamma) * q[n - 1];
    let factor = vy / vq;
    Ok((0..n).map(|i| y[i] - q[i] * factor).collect())
}

/// Controls for the imaginary-time eigensolver.
#[derive(Debug, Clone)]
pub struct EigensolveOptions<T> {
    /// First (largest) imaginary-time step.
    pub dt_start: T,
    /// Number of dt halvings; the states converged at the last two steps are
    /// Richardson-combined to cancel the O(dt²) splitting bias.
    pub halvings: usize,
    /// Required ‖Hχ - λχ‖ of the returned states.
    pub residual_tol: T,
    /// Iteration budget per dt stage per state.
    pub max_iters: usize,
}

impl<T: Real> Default for EigensolveOptions<T> {
    fn default() -> Self {
        EigensolveOptions {
            dt_start: real::<T>(0.1),
            halvings: 3,
            residual_tol: real::<T>(1e-7),
            max_iters: 60_000,
        }
    }
}

fn normalize_state<T: Real>(psi: &mut [Complex<T>], dx: T) {
    let n2: T = psi.iter().map(|c| c.norm_sqr()).sum::<T>() * dx;
    if n2 > T::zero() {
        let inv = T::one() / n2.sqrt();
        for c in psi.iter_mut() {
            *c = c.scale(inv);
        }
    }
}

fn project_out<T: Real>(psi: &mut [Complex<T>], lower: &[Vec<Complex<T>>], dx: T) {
    for chi in lower {
        let mut ov = Complex::new(T::zero(), T::zero());
        for (c, l) in psi.iter().zip(chi) {
            ov += l.conj() * *c;
        }
        ov = ov.scale(dx);
        for (c, l) in psi.iter_mut().zip(chi) {
            *c -= *l * ov;
        }
    }
}

fn rayleigh_quotient<T: Real>(
    ws: &SpectralWorkspace<T>,
    psi: &[Complex<T>],
    v: &[T],
    params: &PhysicalParams<T>,
    dx: T,
) -> T {
    let kin = ws.kinetic_expectation(psi, dx, params.hbar, params.mass);
    let pot: T = psi
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let d = c.norm_sqr();
            (v[i] + params.g * d) * d
        })
        .sum::<T>()
        * dx;
    kin + pot
}

/// Relaxes one state to the lowest eigenstate orthogonal to `lower` at a
/// fixed imaginary-time step, until the Rayleigh quotient plateaus.
fn relax_at_dt<T: Real>(
    ws: &SpectralWorkspace<T>,
    psi: &mut Vec<Complex<T>>,
    v: &[T],
    lower: &[Vec<Complex<T>>],
    params: &PhysicalParams<T>,
    dx: T,
    dt: T,
    max_iters: usize,
) -> Result<T> {
    let half = real::<T>(0.5);
    let kin_coeff = params.hbar * dt / (real::<T>(2.0) * params.mass);
    let mut lambda_prev = T::infinity();
    let block = 32usize;
    let mut iters = 0;
    // Exact half-step of ∂_τ ψ = -(V + g|ψ|²)ψ/ħ. Freezing the density here
    // would leave a first-order bias in the fixed point (the density decays
    // *during* the kick), defeating the Richardson stage; the pointwise
    // Bernoulli solution u(τ) = u₀ e^{-z} / (1 + g u₀ q), z = 2Vτ/ħ,
    // q = (2τ/ħ)(1 - e^{-z})/z keeps the composition time-symmetric.
    let tau = dt * half;
    let kick = |psi: &mut [Complex<T>]| -> Result<()> {
        let two_tau = real::<T>(2.0) * tau / params.hbar;
        for (c, &vi) in psi.iter_mut().zip(v) {
            let u0 = c.norm_sqr();
            let z = two_tau * vi;
            let decay = (-z).exp();
            let phi = if z.abs() < real::<T>(1e-12) {
                T::one() - z * half
            } else {
                -(-z).exp_m1() / z
            };
            let denom = T::one() + params.g * u0 * two_tau * phi;
            if denom <= T::zero() {
                return Err(Error::StepSize(
                    "imaginary-time step too large for the attractive interaction".into(),
                ));
            }
            *c = c.scale((decay / denom).sqrt());
        }
        Ok(())
    };
    loop {
        for _ in 0..block {
            // e^{-(V+g n) dt/2} e^{-T dt} e^{-(V+g n) dt/2}
            kick(&mut psi[..])?;
            ws.apply_k_decay(psi, kin_coeff);
            kick(&mut psi[..])?;
            project_out(psi, lower, dx);
            normalize_state(psi, dx);
        }
        iters += block;
        let lambda = rayleigh_quotient(ws, psi, v, params, dx);
        let scale = T::one().max(lambda.abs());
        let drift = (lambda - lambda_prev).abs();
        if drift < real::<T>(1e-13) * scale {
            return Ok(lambda);
        }
        lambda_prev = lambda;
        if iters >= max_iters {
            return Err(Error::Convergence {
                what: "imaginary-time relaxation".into(),
                iterations: iters,
                residual: drift.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
}

/// Lowest `n_states` eigenpairs of -ħ²/(2m)∂² + v (+ g|χ|² for the ground
/// state of the nonlinear problem) by imaginary-time relaxation with
/// deflation. Returns normalized real-valued amplitudes with a deterministic
/// sign (positive at the largest x where the state is appreciable) and their
/// eigenvalues.
pub fn imaginary_time_states<T: Real>(
    grid: &Arc<SpatialGrid<T>>,
    v: &[T],
    params: &PhysicalParams<T>,
    n_states: usize,
    opts: &EigensolveOptions<T>,
) -> Result<Vec<(ScalarField<T>, T)>> {
    if v.len() != grid.len() {
        return Err(Error::GridMismatch(
            "potential length differs from grid".into(),
        ));
    }
    if n_states == 0 {
        return Ok(Vec::new());
    }
    if params.g != T::zero() && n_states > 1 {
        return Err(Error::InvalidArgument(
            "excited states of the nonlinear problem are not defined; use g = 0".into(),
        ));
    }
    let n = grid.len();
    let dx = grid.dx();
    let ws = SpectralWorkspace::new(grid);
    // seed around the potential minimum with a width set by the window; only
    // a starting point, relaxation does the rest
    let i_min = (0..n)
        .min_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    let x_c = grid.x(i_min);
    let span = grid.period() / real::<T>(8.0);

    let mut results: Vec<(ScalarField<T>, T)> = Vec::with_capacity(n_states);
    let mut lower: Vec<Vec<Complex<T>>> = Vec::with_capacity(n_states);
    for m in 0..n_states {
        let mut psi: Vec<Complex<T>> = (0..n)
            .map(|i| {
                let x = grid.x(i) - x_c;
                let u = x / span;
                Complex::new(
                    u.powi(m as i32) * (-u * u * real::<T>(0.5)).exp(),
                    T::zero(),
                )
            })
            .collect();
        project_out(&mut psi, &lower, dx);
        normalize_state(&mut psi, dx);

        let mut dt = opts.dt_start;
        let mut stage_back2: Option<Vec<Complex<T>>> = None;
        let mut stage_back1: Option<Vec<Complex<T>>> = None;
        let mut lambda = T::zero();
        for stage in 0..=opts.halvings {
            lambda = relax_at_dt(&ws, &mut psi, v, &lower, params, dx, dt, opts.max_iters)?;
            if opts.halvings >= 2 && stage + 2 == opts.halvings {
                stage_back2 = Some(psi.clone());
            }
            if opts.halvings >= 1 && stage + 1 == opts.halvings {
                stage_back1 = Some(psi.clone());
            }
            if stage < opts.halvings {
                dt = dt * real::<T>(0.5);
            }
        }
        // Extrapolate the fixed points to dt = 0. The linear flow is
        // time-symmetric, so two stages cancel its quadratic bias; the
        // nonlinear one also carries a first-order term (evolving then
        // normalizing is not ray-invariant), so three stages go into
        // cancelling both.
        let nonlinear = params.g != T::zero();
        if nonlinear && stage_back2.is_some() {
            let (c1, c2) = (stage_back2.unwrap(), stage_back1.unwrap());
            let w1 = T::one() / real::<T>(3.0);
            let w2 = real::<T>(-2.0);
            let w3 = real::<T>(8.0) / real::<T>(3.0);
            for (i, c) in psi.iter_mut().enumerate() {
                *c = c1[i].scale(w1) + c2[i].scale(w2) + c.scale(w3);
            }
        } else if let Some(coarse) = stage_back1 {
            let third = T::one() / real::<T>(3.0);
            for (c, co) in psi.iter_mut().zip(&coarse) {
                *c = (c.scale(real::<T>(4.0)) - *co).scale(third);
            }
        }
        if opts.halvings >= 1 {
            project_out(&mut psi, &lower, dx);
            normalize_state(&mut psi, dx);
            lambda = rayleigh_quotient(&ws, &psi, v, params, dx);
        }

        let residual = eigen_residual(grid, &psi, v, lambda, params);
        if residual > opts.residual_tol {
            return Err(Error::Convergence {
                what: format!("eigenstate {m}"),
                iterations: opts.max_iters,
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }

        // realify and fix the sign: positive at the largest appreciable x
        let mut vals: Vec<T> = psi.iter().map(|c| c.re).collect();
        let peak = vals.iter().fold(T::zero(), |mx, &c| mx.max(c.abs()));
        let appreciable = peak * real::<T>(1e-3);
        let anchor = (0..n)
            .rev()
            .find(|&i| vals[i].abs() > appreciable)
            .unwrap_or(n - 1);
        if vals[anchor] < T::zero() {
            for c in vals.iter_mut() {
                *c = -*c;
            }
            for c in psi.iter_mut() {
                *c = -*c;
            }
        }
        lower.push(psi);
        let field = ScalarField::sampled(Arc::clone(grid), vals)?;
        results.push((field, lambda));
    }
    Ok(results)
}

/// Ground state only; see [`imaginary_time_states`].
pub fn imaginary_time_ground_state<T: Real>(
    grid: &Arc<SpatialGrid<T>>,
    v: &[T],
    params: &PhysicalParams<T>,
    opts: &EigensolveOptions<T>,
) -> Result<(ScalarField<T>, T)> {
    Ok(imaginary_time_states(grid, v, params, 1, opts)?
        .pop()
        .unwrap())
}
