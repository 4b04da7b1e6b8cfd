//! Phase reconstruction from a prescribed density history.
//!
//! For ψ = r e^{iφ} to solve the time-dependent (nonlinear) Schrödinger
//! equation with a *real* potential, the imaginary part of the inverse
//! problem must vanish, which pins the phase gradient through a continuity
//! equation: (r² φ′)′ = -(m/ħ) ∂(r²), where ∂ is the derivative along the
//! evolution parameter (time, or the drive R of a scaling family). One
//! spatial integration gives
//!
//!   φ′(x) = -(m/ħ) S(x) / r²(x),   S(x) = ∂ ∫_{x_min}^{x} r² dx′,
//!
//! with the integration constant fixed by zero probability flux into the
//! vacuum at the window edge. Dividing by r² is the numerically delicate
//! step: S must be accurate *relative to the local density*, not in absolute
//! terms, for the quotient to survive in the tails. Callers that know S in
//! closed form supply it via [`PhaseSource::Cumulative`]; the pointwise
//! fallback integrates ∂(r²) on the grid and is trustworthy only where the
//! density is well above the floor.

use crate::domain::{PhysicalParams, ScalarField, SpatialGrid, TimeGrid};
use crate::error::{Error, Result};
use crate::numerics;
use crate::scalar::{real, Real};
use std::sync::Arc;

/// Stencil sizes shared by the phase pipeline.
const PANEL_STENCIL: usize = 8;
const PATCH_STENCIL: usize = 8;
const TIME_FD_STENCIL: usize = 7;

/// Drive-rate data for one slice.
pub enum PhaseSource<'a, T> {
    /// `S(x_i)` already integrated: the parameter derivative of the running
    /// density integral, accurate relative to the local density.
    Cumulative(&'a [T]),
    /// `∂(r²)` sampled pointwise; integrated here with the high-order panel
    /// rule. Absolute accuracy only: the result is meaningful where the
    /// density mask is true.
    PointwiseRate(&'a [T]),
}

#[derive(Debug, Clone)]
pub struct PhaseSliceOptions<T> {
    /// Phase gauge: φ(anchor_x) = 0. Must sit in a valid-density region.
    pub anchor_x: T,
    /// Points with |r| below this fraction of max|r| are excluded from the
    /// quotient. Zero means "divide everywhere" and is appropriate only for
    /// closed-form cumulative sources with matching tail decay.
    pub density_floor_rel: T,
    /// Longest interior run of below-floor samples treated as a node and
    /// bridged by interpolation; longer interior runs are an error.
    pub max_node_run: usize,
}

impl<T: Real> Default for PhaseSliceOptions<T> {
    fn default() -> Self {
        PhaseSliceOptions {
            anchor_x: T::zero(),
            density_floor_rel: real::<T>(1e-8),
            max_node_run: 4,
        }
    }
}

/// Phase on one slice: values φ with the pointwise-exact gradient in `d1`,
/// plus bookkeeping about where the quotient was trusted.
#[derive(Debug, Clone)]
pub struct PhaseSlice<T> {
    /// values = φ (gauged to zero at the anchor), d1 = φ′.
    pub phi: ScalarField<T>,
    /// False on tail regions where the density sits below the floor and φ′
    /// was extended by zero.
    pub mask: Vec<bool>,
    /// Interior node samples where φ′ was bridged by local interpolation.
    pub patched: Vec<usize>,
    pub anchor_index: usize,
}

/// Classifies sub-floor samples: interior nodes get bridged, tail runs get
/// masked out, and a wide interior hole (density support split in two) makes
/// the phase underdetermined, which is a hard error.
fn classify_invalid<T: Real>(
    grid: &SpatialGrid<T>,
    valid: &[bool],
    max_node_run: usize,
) -> Result<(Vec<bool>, Vec<usize>)> {
    let n = valid.len();
    let mut mask = vec![true; n];
    let mut patched = Vec::new();
    let mut i = 0;
    while i < n {
        if valid[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && !valid[i] {
            i += 1;
        }
        let end = i; // run is [start, end)
        let touches_edge = start == 0 || end == n;
        if touches_edge {
            for m in mask.iter_mut().take(end).skip(start) {
                *m = false;
            }
        } else if end - start <= max_node_run {
            patched.extend(start..end);
        } else {
            return Err(Error::IllConditionedPhase {
                x_lo: grid.x(start).to_f64().unwrap_or(f64::NAN),
                x_hi: grid.x(end - 1).to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok((mask, patched))
}

/// Bridges φ′ across an isolated node by Lagrange interpolation from the
/// nearest trusted samples on both sides.
fn patch_gradient<T: Real>(
    phi_x: &mut [T],
    trusted: &[bool],
    patched: &[usize],
) -> Result<()> {
    let n = phi_x.len();
    for &idx in patched {
        let mut nodes: Vec<usize> = Vec::with_capacity(PATCH_STENCIL);
        let mut lo = idx as isize - 1;
        let mut hi = idx + 1;
        while nodes.len() < PATCH_STENCIL {
            let can_lo = lo >= 0;
            let can_hi = hi < n;
            if !can_lo && !can_hi {
                break;
            }
            // Prefer whichever side is closer to keep the stencil balanced.
            let take_lo = match (can_lo, can_hi) {
                (true, true) => (idx as isize - lo) <= (hi as isize - idx as isize),
                (true, false) => true,
                _ => false,
            };
            if take_lo {
                if trusted[lo as usize] {
                    nodes.push(lo as usize);
                }
                lo -= 1;
            } else {
                if trusted[hi] {
                    nodes.push(hi);
                }
                hi += 1;
            }
        }
        if nodes.len() < PATCH_STENCIL / 2 {
            return Err(Error::IllConditionedPhase {
                x_lo: f64::NAN,
                x_hi: f64::NAN,
            });
        }
        nodes.sort_unstable();
        let rel: Vec<T> = nodes
            .iter()
            .map(|&k| T::from_usize(k).unwrap() - T::from_usize(idx).unwrap())
            .collect();
        let w = numerics::fd_weights(T::zero(), &rel, 0).pop().unwrap();
        let mut acc = T::zero();
        for (l, &k) in nodes.iter().enumerate() {
            acc = acc + w[l] * phi_x[k];
        }
        phi_x[idx] = acc;
    }
    Ok(())
}

/// Solves the slice continuity equation for φ′ and integrates it to φ with
/// the gauge φ(anchor) = 0.
pub fn solve_phase_slice<T: Real>(
    r: &ScalarField<T>,
    source: PhaseSource<'_, T>,
    params: &PhysicalParams<T>,
    opts: &PhaseSliceOptions<T>,
) -> Result<PhaseSlice<T>> {
    let grid = Arc::clone(r.grid());
    let n = grid.len();
    let s_cum: Vec<T> = match source {
        PhaseSource::Cumulative(s) => {
            if s.len() != n {
                return Err(Error::GridMismatch(
                    "cumulative source length differs from grid".into(),
                ));
            }
            s.to_vec()
        }
        PhaseSource::PointwiseRate(rate) => {
            if rate.len() != n {
                return Err(Error::GridMismatch(
                    "pointwise source length differs from grid".into(),
                ));
            }
            numerics::cumulative_integral_uniform(rate, grid.dx(), PANEL_STENCIL)
        }
    };

    let r2: Vec<T> = r.values.iter().map(|&v| v * v).collect();
    let max_r = r.max_abs();
    if !(max_r > T::zero()) {
        return Err(Error::InvalidArgument(
            "density slice is identically zero".into(),
        ));
    }
    let floor2 = (opts.density_floor_rel * max_r).powi(2);
    let valid: Vec<bool> = r2.iter().map(|&d| d > floor2 && d > T::zero()).collect();
    let (mask, patched) = classify_invalid(&grid, &valid, opts.max_node_run)?;

    let scale = -params.mass / params.hbar;
    let mut phi_x = vec![T::zero(); n];
    for i in 0..n {
        if valid[i] {
            phi_x[i] = scale * s_cum[i] / r2[i];
        }
    }
    patch_gradient(&mut phi_x, &valid, &patched)?;

    // Integrate φ′ over the trusted interval only. The classification above
    // guarantees it is contiguous (interior holes are bridged or fatal), and
    // keeping the panel stencils inside it matters: at the interval ends φ′
    // steps down to the masked zeros, and a stencil straddling that step
    // would corrupt the last stencil-width of trusted φ values. Outside the
    // interval the phase is continued flat.
    let seg_lo = mask
        .iter()
        .position(|&m| m)
        .expect("a nonzero density slice has at least one trusted point");
    let seg_hi = n - mask.iter().rev().position(|&m| m).unwrap();
    debug_assert!(mask[seg_lo..seg_hi].iter().all(|&m| m));
    if seg_hi - seg_lo < PANEL_STENCIL {
        return Err(Error::GridTooSmall(format!(
            "only {} grid points clear the density floor; the phase quadrature needs {}",
            seg_hi - seg_lo,
            PANEL_STENCIL
        )));
    }
    let inner =
        numerics::cumulative_integral_uniform(&phi_x[seg_lo..seg_hi], grid.dx(), PANEL_STENCIL);
    let mut phi = vec![T::zero(); n];
    let tail = *inner.last().unwrap();
    phi[seg_lo..seg_hi].copy_from_slice(&inner);
    for p in phi.iter_mut().skip(seg_hi) {
        *p = tail;
    }
    let anchor_index = grid.index_nearest(opts.anchor_x);
    if !mask[anchor_index] {
        return Err(Error::InvalidArgument(
            "phase anchor sits in a below-floor density region".into(),
        ));
    }
    let phi0 = phi[anchor_index];
    for p in &mut phi {
        *p = *p - phi0;
    }

    let phi_field = ScalarField::sampled(grid, phi)?.with_d1(phi_x);
    Ok(PhaseSlice {
        phi: phi_field,
        mask,
        patched,
        anchor_index,
    })
}

/// Same continuity operator with the drive R of a scaling family in the role
/// of the evolution parameter: the result is the auxiliary phase θ(x; R)
/// whose gradient enters the engineered potential through Ṙ θ′.
pub fn solve_theta<T: Real>(
    r_tilde: &ScalarField<T>,
    source: PhaseSource<'_, T>,
    params: &PhysicalParams<T>,
    opts: &PhaseSliceOptions<T>,
) -> Result<PhaseSlice<T>> {
    solve_phase_slice(r_tilde, source, params, opts)
}

/// Drive schedule R(t) = R₀ + ε Λ(t) for the fast-forward route, held as the
/// slow shape functions α = Λ̇ and α̇ together with the rate ε. The physics
/// depends on ε only through the products εα and εα̇ (and the combination
/// R₀ + εΛ); keeping the factors separate lets tests pin that invariance.
pub struct FFSchedule<T> {
    epsilon: T,
    r0: T,
    lambda: Box<dyn Fn(T) -> T + Send + Sync>,
    alpha: Box<dyn Fn(T) -> T + Send + Sync>,
    alpha_dot: Box<dyn Fn(T) -> T + Send + Sync>,
}

impl<T: Real> FFSchedule<T> {
    pub fn new(
        epsilon: T,
        r0: T,
        lambda: Box<dyn Fn(T) -> T + Send + Sync>,
        alpha: Box<dyn Fn(T) -> T + Send + Sync>,
        alpha_dot: Box<dyn Fn(T) -> T + Send + Sync>,
    ) -> Result<Self> {
        if !(epsilon > T::zero()) || !(r0 > T::zero()) {
            return Err(Error::InvalidArgument(
                "schedule needs positive epsilon and initial drive".into(),
            ));
        }
        Ok(FFSchedule {
            epsilon,
            r0,
            lambda,
            alpha,
            alpha_dot,
        })
    }

    pub fn drive(&self, t: T) -> T {
        self.r0 + self.epsilon * (self.lambda)(t)
    }

    /// Ṙ = ε α.
    pub fn drive_rate(&self, t: T) -> T {
        self.epsilon * (self.alpha)(t)
    }

    /// R̈ = ε α̇.
    pub fn drive_accel(&self, t: T) -> T {
        self.epsilon * (self.alpha_dot)(t)
    }

    /// The construction starts and ends on stationary states only when the
    /// drive is flat at both ends: Ṙ = R̈ = 0 at t = 0 and t = t_f.
    pub fn validate_flat_ends(&self, t_f: T, tol: T) -> Result<()> {
        for &t in &[T::zero(), t_f] {
            if self.drive_rate(t).abs() > tol || self.drive_accel(t).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "drive schedule is not flat at t = {:?}: Ṙ = {:?}, R̈ = {:?}",
                    t,
                    self.drive_rate(t),
                    self.drive_accel(t)
                )));
            }
        }
        Ok(())
    }
}

/// Full space-time phase: values, spatial gradient, and time derivative on
/// every knot of a movie.
#[derive(Debug, Clone)]
pub struct PhaseField<T> {
    grid: Arc<SpatialGrid<T>>,
    time: TimeGrid<T>,
    /// φ[slice][point]
    pub phi: Vec<Vec<T>>,
    pub phi_x: Vec<Vec<T>>,
    pub phi_dot: Vec<Vec<T>>,
}

impl<T: Real> PhaseField<T> {
    pub fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    pub fn time(&self) -> &TimeGrid<T> {
        &self.time
    }

    pub fn n_slices(&self) -> usize {
        self.phi.len()
    }

    /// Instantaneous energy read off the phase: E = -ħ φ̇ at one sample.
    /// Meaningful at stationary endpoints where φ̇ is spatially uniform.
    pub fn energy_at(&self, slice: usize, index: usize, hbar: T) -> T {
        -hbar * self.phi_dot[slice][index]
    }
}

/// φ̇ by finite differences along the time axis, column by column.
fn phi_dot_by_time_fd<T: Real>(phi: &[Vec<T>], dt: T) -> Vec<Vec<T>> {
    let n_slices = phi.len();
    let n_x = phi[0].len();
    let mut out = vec![vec![T::zero(); n_x]; n_slices];
    let mut column = vec![T::zero(); n_slices];
    for i in 0..n_x {
        for (k, slice) in phi.iter().enumerate() {
            column[k] = slice[i];
        }
        let d = numerics::derivative_uniform(&column, dt, 1, TIME_FD_STENCIL);
        for (k, v) in d.into_iter().enumerate() {
            out[k][i] = v;
        }
    }
    out
}

/// Stitches independently solved slices into a space-time phase. Every slice
/// must share the gauge φ(anchor) = 0; φ̇ comes from a high-order finite
/// difference across slices.
pub fn phase_field_from_slices<T: Real>(
    slices: &[PhaseSlice<T>],
    grid: &Arc<SpatialGrid<T>>,
    time: &TimeGrid<T>,
) -> Result<PhaseField<T>> {
    if slices.len() != time.n_slices() {
        return Err(Error::GridMismatch(format!(
            "{} phase slices for a time grid with {} knots",
            slices.len(),
            time.n_slices()
        )));
    }
    if slices.len() < TIME_FD_STENCIL {
        return Err(Error::GridTooSmall(
            "too few time knots for the φ̇ stencil".into(),
        ));
    }
    for s in slices {
        if s.phi.grid() != grid {
            return Err(Error::GridMismatch(
                "phase slices solved on a different spatial grid".into(),
            ));
        }
    }
    let phi: Vec<Vec<T>> = slices.iter().map(|s| s.phi.values.clone()).collect();
    let phi_x: Vec<Vec<T>> = slices.iter().map(|s| s.phi.d1_samples()).collect();
    let phi_dot = phi_dot_by_time_fd(&phi, time.dt());
    Ok(PhaseField {
        grid: Arc::clone(grid),
        time: time.clone(),
        phi,
        phi_x,
        phi_dot,
    })
}

/// Inputs for assembling the fast-forward phase
/// φ(x,t) = -(1/ħ) ∫₀ᵗ E(R) dt′ + Ṙ(t) θ(x; R(t)).
pub struct FFAssembly<'a, T> {
    /// θ solved at each knot's drive value; `dparam` holds ∂θ/∂R when the
    /// family provides it in closed form.
    pub theta_slices: &'a [PhaseSlice<T>],
    /// Stationary-state energy E(R(t_k)) at each knot.
    pub energies: &'a [T],
    pub schedule: &'a FFSchedule<T>,
    pub time: &'a TimeGrid<T>,
}

/// Assembles φ, φ′, φ̇ for the fast-forward route. When every θ slice
/// carries an analytic ∂θ/∂R channel, φ̇ is evaluated exactly as
/// φ̇ = -E/ħ + R̈ θ + Ṙ² ∂θ/∂R; otherwise it falls back to the time
/// difference of φ.
pub fn assemble_ff_phase<T: Real>(
    asm: FFAssembly<'_, T>,
    params: &PhysicalParams<T>,
) -> Result<PhaseField<T>> {
    let n_slices = asm.time.n_slices();
    if asm.theta_slices.len() != n_slices || asm.energies.len() != n_slices {
        return Err(Error::GridMismatch(format!(
            "fast-forward assembly needs {} slices, got {} thetas and {} energies",
            n_slices,
            asm.theta_slices.len(),
            asm.energies.len()
        )));
    }
    if n_slices < PANEL_STENCIL {
        return Err(Error::GridTooSmall(
            "too few time knots for the energy-phase quadrature".into(),
        ));
    }
    let grid = Arc::clone(asm.theta_slices[0].phi.grid());
    let n_x = grid.len();

    // -(1/ħ) ∫ E dt on the knots.
    let cum_e = numerics::cumulative_integral_uniform(asm.energies, asm.time.dt(), PANEL_STENCIL);
    let inv_hbar = T::one() / params.hbar;

    let mut phi = Vec::with_capacity(n_slices);
    let mut phi_x = Vec::with_capacity(n_slices);
    for (k, slice) in asm.theta_slices.iter().enumerate() {
        let t = asm.time.time(k);
        let rate = asm.schedule.drive_rate(t);
        let dynamic = -cum_e[k] * inv_hbar;
        let theta = &slice.phi.values;
        let theta_x = slice.phi.d1_samples();
        phi.push(theta.iter().map(|&th| dynamic + rate * th).collect::<Vec<_>>());
        phi_x.push(theta_x.iter().map(|&d| rate * d).collect::<Vec<_>>());
    }

    let all_analytic = asm.theta_slices.iter().all(|s| s.phi.dparam.is_some());
    let phi_dot = if all_analytic {
        let mut out = Vec::with_capacity(n_slices);
        for (k, slice) in asm.theta_slices.iter().enumerate() {
            let t = asm.time.time(k);
            let accel = asm.schedule.drive_accel(t);
            let rate2 = asm.schedule.drive_rate(t).powi(2);
            let e_term = -asm.energies[k] * inv_hbar;
            let theta = &slice.phi.values;
            let theta_r = slice.phi.dparam.as_ref().unwrap();
            let mut row = Vec::with_capacity(n_x);
            for i in 0..n_x {
                row.push(e_term + accel * theta[i] + rate2 * theta_r[i]);
            }
            out.push(row);
        }
        out
    } else {
        phi_dot_by_time_fd(&phi, asm.time.dt())
    };

    Ok(PhaseField {
        grid,
        time: asm.time.clone(),
        phi,
        phi_x,
        phi_dot,
    })
}
