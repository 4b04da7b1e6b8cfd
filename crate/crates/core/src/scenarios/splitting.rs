//! Matter-wave splitting: drive a single Gaussian into a symmetric double
//! Gaussian by prescribing the density history and inverting it into a real
//! trapping potential.
//!
//! The amplitude movie is the normalized interpolation
//! r(x,t) = z(t)·{[1−R(t)] g₀(x) + R(t) [g₊(x) + g₋(x)]} between a centered
//! Gaussian and a pair displaced to ±a, with a polynomial ramp R(t) flat to
//! third order at both ends. Each slice's phase comes from the continuity
//! equation with zero flux at the center (φ(0,t) = φ′(0,t) = 0), the
//! potential from the inverted wave equation, and the reality of that
//! potential is certified pointwise. The run ends by propagating the initial
//! Gaussian under the synthesized movie and scoring the overlap with the
//! double-Gaussian target.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::domain::{
    eval_ramp, make_ramp, PhysicalParams, RampPolynomial, ScalarField, SpatialGrid, TimeGrid,
    UnitScales, WaveState,
};
use crate::error::{Error, Result};
use crate::phase_solver::{
    phase_field_from_slices, solve_phase_slice, PhaseField, PhaseSliceOptions, PhaseSource,
};
use crate::potential_builder::{
    build_potential_movie, count_potential_minima, imag_residual_slice, real_potential_slice,
    PotentialMovie, PotentialRoute,
};
use crate::propagator::{
    eigen_residual, propagate, ObservableHooks, ObservableSeries, PropagationConfig,
};
use crate::scalar::{real, Real};

/// Run parameters for the splitting scenario, in natural units of the
/// reference trap (ħ = m = 1, lengths in √(ħ/mω), times in 1/ω).
#[derive(Debug, Clone)]
pub struct SplittingConfig<T> {
    /// Inverse width of every Gaussian lobe, √(mω/ħ); 1 in natural units.
    pub beta: T,
    /// Final lobe displacement ±a.
    pub separation: T,
    pub t_f: T,
    pub half_width: T,
    pub n_points: usize,
    /// Movie time steps; the movie has `n_steps + 1` knots.
    pub n_steps: usize,
    pub substeps: usize,
    /// Derivatives of R pinned to zero at both ends (≥ 3).
    pub ramp_flatness: usize,
    pub potential_cap: T,
    /// Prominence threshold for the well-count diagnostic, in ħω.
    pub prominence: T,
    pub params: PhysicalParams<T>,
}

impl SplittingConfig<f64> {
    /// Natural-unit configuration from laboratory numbers.
    pub fn from_si(
        mass_kg: f64,
        omega_rad_s: f64,
        separation_m: f64,
        half_width_m: f64,
        t_f_s: f64,
        n_steps: usize,
    ) -> Result<Self> {
        let scales = UnitScales::new(mass_kg, omega_rad_s)?;
        Ok(SplittingConfig {
            beta: 1.0,
            separation: separation_m / scales.x0_m,
            t_f: t_f_s / scales.t0_s,
            half_width: half_width_m / scales.x0_m,
            n_points: 1024,
            n_steps,
            substeps: 8,
            ramp_flatness: 3,
            potential_cap: 1e3,
            prominence: 0.05,
            params: PhysicalParams::natural(0.0),
        })
    }

    /// The demonstration run: m = 1.44·10⁻²⁵ kg, ω/2π = 125 Hz, lobes at
    /// ±3 μm, window ±12 μm, t_f = 80 ms.
    pub fn reference_slow() -> Self {
        Self::from_si(
            1.44e-25,
            2.0 * std::f64::consts::PI * 125.0,
            3e-6,
            12e-6,
            0.08,
            399,
        )
        .expect("demonstration parameters are valid")
    }

    /// The hurried variant of the same split: t_f = 10 ms, finer time grid.
    pub fn reference_fast() -> Self {
        Self::from_si(
            1.44e-25,
            2.0 * std::f64::consts::PI * 125.0,
            3e-6,
            12e-6,
            0.01,
            799,
        )
        .expect("demonstration parameters are valid")
    }
}

/// The three-Gaussian interpolation movie and its exact derivatives.
pub struct SplitInterpolation<T> {
    beta: T,
    separation: T,
    t_f: T,
    ramp: RampPolynomial<T>,
    /// ∫g₀², ∫g₀(g₊+g₋), ∫(g₊+g₋)².
    i00: T,
    i0d: T,
    idd: T,
}

impl<T: Real> SplitInterpolation<T> {
    pub fn new(beta: T, separation: T, t_f: T, ramp_flatness: usize) -> Result<Self> {
        if !(beta > T::zero()) || !(separation > T::zero()) {
            return Err(Error::InvalidArgument(
                "lobe width and separation must be positive".into(),
            ));
        }
        if !(t_f > T::zero()) {
            return Err(Error::InvalidArgument("duration must be positive".into()));
        }
        if ramp_flatness < 3 {
            return Err(Error::InvalidArgument(
                "the split needs R flat to third order at the ends".into(),
            ));
        }
        let ramp = make_ramp(2 * ramp_flatness + 1, ramp_flatness)?;
        let sqrt_pi = real::<T>(std::f64::consts::PI).sqrt();
        let base = sqrt_pi / beta;
        let quarter = real::<T>(0.25);
        let two = real::<T>(2.0);
        let b2a2 = beta * beta * separation * separation;
        Ok(SplitInterpolation {
            beta,
            separation,
            t_f,
            ramp,
            i00: base,
            i0d: two * base * (-quarter * b2a2).exp(),
            idd: two * base * (T::one() + (-b2a2).exp()),
        })
    }

    /// Lobe centers (0, +a, −a).
    fn centers(&self) -> [T; 3] {
        [T::zero(), self.separation, -self.separation]
    }

    /// Mixing weight R(t) and its rate Ṙ(t).
    pub fn mix(&self, t: T) -> Result<(T, T)> {
        Ok((
            eval_ramp(&self.ramp, t, self.t_f, 0)?,
            eval_ramp(&self.ramp, t, self.t_f, 1)?,
        ))
    }

    /// ∫u² and its R-derivative at mixing weight R.
    fn norm_terms(&self, r: T) -> (T, T) {
        let one_m = T::one() - r;
        let two = real::<T>(2.0);
        let n = one_m * one_m * self.i00 + two * r * one_m * self.i0d + r * r * self.idd;
        let n_r = -two * one_m * self.i00 + two * (T::one() - two * r) * self.i0d
            + two * r * self.idd;
        (n, n_r)
    }

    /// The normalized amplitude r(x,t) with analytic ∂ₓ, ∂ₓₓ in the spatial
    /// channels and ∂ₜ in the parameter channel.
    pub fn amplitude(&self, grid: &Arc<SpatialGrid<T>>, t: T) -> Result<ScalarField<T>> {
        let (r_mix, r_rate) = self.mix(t)?;
        let (norm, norm_r) = self.norm_terms(r_mix);
        let z = T::one() / norm.sqrt();
        let z_dot = -norm_r * r_rate / (real::<T>(2.0) * norm * norm.sqrt());
        let beta2 = self.beta * self.beta;
        let centers = self.centers();
        let weights = [T::one() - r_mix, r_mix, r_mix];
        let rates = [-r_rate, r_rate, r_rate];

        let n = grid.len();
        let mut values = Vec::with_capacity(n);
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        let mut dparam = Vec::with_capacity(n);
        let half = real::<T>(0.5);
        for i in 0..n {
            let x = grid.x(i);
            let mut u = T::zero();
            let mut u_x = T::zero();
            let mut u_xx = T::zero();
            let mut u_t = T::zero();
            for c in 0..3 {
                let s = x - centers[c];
                let g = (-half * beta2 * s * s).exp();
                let g_x = -beta2 * s * g;
                let g_xx = beta2 * (beta2 * s * s - T::one()) * g;
                u = u + weights[c] * g;
                u_x = u_x + weights[c] * g_x;
                u_xx = u_xx + weights[c] * g_xx;
                u_t = u_t + rates[c] * g;
            }
            values.push(z * u);
            d1.push(z * u_x);
            d2.push(z * u_xx);
            dparam.push(z_dot * u + z * u_t);
        }
        Ok(ScalarField::sampled(Arc::clone(grid), values)?
            .with_d1(d1)
            .with_d2(d2)
            .with_dparam(dparam))
    }

    /// Cumulative flux source S(x,t) = ∂ₜ ∫_{-∞}^x r² dx′ in closed form.
    ///
    /// ∂ₜr² expands over Gaussian pair products g_i g_j, each of which
    /// integrates to a complementary error function. Each pair term is
    /// written with an erfc of positive argument on whichever side of the
    /// grid it decays, so the tails keep full relative precision; the two
    /// writings differ per pair by a constant whose weighted sum over pairs
    /// is ∂ₜ∫r² = 0, so the switch at x = 0 introduces no jump.
    pub fn flux_source(&self, grid: &Arc<SpatialGrid<T>>, t: T) -> Result<Vec<T>> {
        let (r_mix, r_rate) = self.mix(t)?;
        let (norm, norm_r) = self.norm_terms(r_mix);
        let z = T::one() / norm.sqrt();
        let z_dot = -norm_r * r_rate / (real::<T>(2.0) * norm * norm.sqrt());
        let centers = self.centers();
        let weights = [T::one() - r_mix, r_mix, r_mix];
        let rates = [-r_rate, r_rate, r_rate];

        let two = real::<T>(2.0);
        let quarter = real::<T>(0.25);
        let half = real::<T>(0.5);
        let sqrt_pi = real::<T>(std::f64::consts::PI).sqrt();
        let z2 = z * z;
        let zz_dot = two * z * z_dot;

        // Pair coefficients D_ij and midpoints; D_ij = ∂ₜ(z² w_i w_j).
        let mut coeff = [[T::zero(); 3]; 3];
        let mut mid = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let d_ij = zz_dot * weights[i] * weights[j]
                    + z2 * (rates[i] * weights[j] + weights[i] * rates[j]);
                let gap = centers[i] - centers[j];
                let gauss = (-quarter * self.beta * self.beta * gap * gap).exp();
                coeff[i][j] = d_ij * gauss * half * sqrt_pi / self.beta;
                mid[i][j] = half * (centers[i] + centers[j]);
            }
        }

        let n = grid.len();
        let mut out = Vec::with_capacity(n);
        for idx in 0..n {
            let x = grid.x(idx);
            let mut s = T::zero();
            for i in 0..3 {
                for j in 0..3 {
                    let arg = self.beta * (mid[i][j] - x);
                    let b = if x <= T::zero() {
                        arg.erfc()
                    } else {
                        -(-arg).erfc()
                    };
                    s = s + coeff[i][j] * b;
                }
            }
            out.push(s);
        }
        Ok(out)
    }
}

/// Stationarity check at a protocol boundary.
#[derive(Debug, Clone, Copy)]
pub struct SplitBoundaryCheck<T> {
    /// `false` → t = 0, `true` → t = t_f.
    pub at_end: bool,
    /// E = −ħφ̇ at the anchor; zero in this gauge.
    pub energy: T,
    /// ‖Hψ − Eψ‖ (L² norm).
    pub residual: T,
}

/// Everything the splitting run produces.
pub struct SplittingOutcome<T> {
    pub movie: PotentialMovie<T>,
    pub phase: PhaseField<T>,
    /// Worst |Im V| over all knots and trusted points.
    pub im_residual_max: T,
    /// Prominence-filtered count of potential minima at every knot.
    pub minima_counts: Vec<usize>,
    /// Worst |V| over all knots and trusted points, before capping.
    pub max_abs_potential: T,
    /// |⟨target|ψ(t_f)⟩|² against the double-Gaussian target.
    pub final_fidelity: T,
    pub boundary_checks: [SplitBoundaryCheck<T>; 2],
    pub series: ObservableSeries<T>,
}

/// Runs the full splitting scenario.
pub fn run_splitting<T: Real>(config: &SplittingConfig<T>) -> Result<SplittingOutcome<T>> {
    if config.substeps == 0 {
        return Err(Error::StepSize("substeps must be at least 1".into()));
    }
    let params = &config.params;
    let interp = SplitInterpolation::new(
        config.beta,
        config.separation,
        config.t_f,
        config.ramp_flatness,
    )?;
    let grid = Arc::new(SpatialGrid::symmetric(config.half_width, config.n_points)?);
    let time = TimeGrid::new(config.t_f, config.n_steps)?;
    let n_slices = time.n_slices();
    let opts = PhaseSliceOptions::default();

    // Amplitude and phase on every knot, in parallel.
    let built: Vec<(ScalarField<T>, crate::phase_solver::PhaseSlice<T>)> = (0..n_slices)
        .into_par_iter()
        .map(|k| {
            let t = time.time(k);
            let r = interp.amplitude(&grid, t)?;
            let source = interp.flux_source(&grid, t)?;
            let slice = solve_phase_slice(&r, PhaseSource::Cumulative(&source), params, &opts)?;
            Ok((r, slice))
        })
        .collect::<Result<_>>()?;
    let (fields, slices): (Vec<_>, Vec<_>) = built.into_iter().unzip();

    // Space-time phase with φ̇ from time differencing (shared φ(0,t) = 0
    // gauge makes the columns differentiable).
    let phase = phase_field_from_slices(&slices, &grid, &time)?;

    // Potential movie, reality certificate, and well counts.
    let per_knot: Vec<(Vec<T>, T, T, usize)> = (0..n_slices)
        .into_par_iter()
        .map(|k| {
            let mask = &slices[k].mask;
            let v = real_potential_slice(&fields[k], &phase.phi_x[k], &phase.phi_dot[k], mask, params);
            let r_dot = fields[k]
                .dparam
                .as_ref()
                .expect("interpolation slices carry ∂ₜr");
            let im = imag_residual_slice(&fields[k], r_dot, &phase.phi_x[k], mask, params);
            let im_max = im
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .fold(T::zero(), |acc, (&e, _)| acc.max(e.abs()));
            let v_max = v
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .fold(T::zero(), |acc, (&e, _)| acc.max(e.abs()));
            // Count wells on the trusted interval only; the constant-filled
            // tails are not part of the synthesized potential.
            let lo = mask.iter().position(|&m| m).unwrap_or(0);
            let hi = v.len() - mask.iter().rev().position(|&m| m).unwrap_or(v.len());
            let wells = count_potential_minima(&v[lo..hi], config.prominence).len();
            (v, im_max, v_max, wells)
        })
        .collect();

    let im_residual_max = per_knot
        .iter()
        .fold(T::zero(), |m, (_, im, _, _)| m.max(*im));
    let max_abs_potential = per_knot
        .iter()
        .fold(T::zero(), |m, (_, _, v_max, _)| m.max(*v_max));
    let minima_counts: Vec<usize> = per_knot.iter().map(|(_, _, _, w)| *w).collect();

    let movie = build_potential_movie(
        &grid,
        &time,
        config.potential_cap,
        PotentialRoute::DensityDriven,
        |k| Ok((per_knot[k].0.clone(), slices[k].mask.clone())),
    )?;

    // Designed state at each knot, for the fidelity series.
    let designed = |k: usize| -> Vec<Complex<T>> {
        fields[k]
            .values
            .iter()
            .zip(&phase.phi[k])
            .map(|(&a, &p)| Complex::from_polar(a, p))
            .collect()
    };

    let psi0 = WaveState::new(Arc::clone(&grid), designed(0), T::zero())?;
    let prop_config = PropagationConfig {
        substeps: config.substeps,
        ..PropagationConfig::default()
    };
    let reference = |k: usize| designed(k);
    let (_, series) = propagate(
        &movie,
        &psi0,
        params,
        &prop_config,
        ObservableHooks {
            reference: Some(&reference),
            invariant: None,
        },
    )?;
    let final_fidelity = *series
        .fidelity
        .as_ref()
        .and_then(|f| f.last())
        .expect("fidelity series present when a reference hook is supplied");

    // Boundary stationarity. The anchor gauge pins φ(0,t) = 0 for every
    // slice, so the boundary energy −ħφ̇(0) vanishes identically.
    let anchor = grid.index_nearest(T::zero());
    let last = n_slices - 1;
    let mut boundary_checks = [SplitBoundaryCheck {
        at_end: false,
        energy: T::zero(),
        residual: T::zero(),
    }; 2];
    for (slot, &(k, at_end)) in boundary_checks
        .iter_mut()
        .zip(&[(0usize, false), (last, true)])
    {
        let psi = designed(k);
        let energy = phase.energy_at(k, anchor, params.hbar);
        let residual = eigen_residual(&grid, &psi, movie.slice(k), energy, params);
        *slot = SplitBoundaryCheck {
            at_end,
            energy,
            residual,
        };
    }

    Ok(SplittingOutcome {
        movie,
        phase,
        im_residual_max,
        minima_counts,
        max_abs_potential,
        final_fidelity,
        boundary_checks,
        series,
    })
}

/// Runs the slow and fast variants side by side (they are independent).
pub fn run_splitting_pair<T: Real>(
    slow: &SplittingConfig<T>,
    fast: &SplittingConfig<T>,
) -> Result<(SplittingOutcome<T>, SplittingOutcome<T>)> {
    let (a, b) = rayon::join(|| run_splitting(slow), || run_splitting(fast));
    Ok((a?, b?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{cumulative_integral_uniform, trapezoid};

    fn test_interp() -> SplitInterpolation<f64> {
        SplitInterpolation::new(1.0, 3.1068, 62.832, 3).unwrap()
    }

    fn test_grid() -> Arc<SpatialGrid<f64>> {
        Arc::new(SpatialGrid::symmetric(12.427, 1024).unwrap())
    }

    #[test]
    fn amplitude_is_normalized_at_every_stage() {
        let interp = test_interp();
        let grid = test_grid();
        for &t in &[0.0, 9.7, 31.4, 50.1, 62.832] {
            let r = interp.amplitude(&grid, t).unwrap();
            let dens: Vec<f64> = r.values.iter().map(|&v| v * v).collect();
            let norm = trapezoid(&dens, grid.dx());
            assert!(
                (norm - 1.0).abs() < 1e-12,
                "norm at t = {t}: {norm}"
            );
        }
    }

    #[test]
    fn endpoints_are_single_and_double_gaussians() {
        let interp = test_interp();
        let grid = test_grid();
        let beta: f64 = 1.0;
        let a = 3.1068;

        let r0 = interp.amplitude(&grid, 0.0).unwrap();
        let z0 = (beta * beta / std::f64::consts::PI).sqrt().sqrt();
        for i in (0..grid.len()).step_by(31) {
            let x = grid.x(i);
            let expect = z0 * (-0.5 * beta * beta * x * x).exp();
            assert!(
                (r0.values[i] - expect).abs() < 1e-12,
                "single Gaussian mismatch at x = {x}"
            );
        }

        let rf = interp.amplitude(&grid, 62.832).unwrap();
        let nf = 2.0 * (std::f64::consts::PI).sqrt() / beta
            * (1.0 + (-beta * beta * a * a).exp());
        let zf = 1.0 / nf.sqrt();
        for i in (0..grid.len()).step_by(31) {
            let x = grid.x(i);
            let expect = zf
                * ((-0.5 * beta * beta * (x - a) * (x - a)).exp()
                    + (-0.5 * beta * beta * (x + a) * (x + a)).exp());
            assert!(
                (rf.values[i] - expect).abs() < 1e-12,
                "double Gaussian mismatch at x = {x}"
            );
        }
    }

    #[test]
    fn analytic_time_derivative_matches_finite_differences() {
        let interp = test_interp();
        let grid = test_grid();
        let t = 27.3;
        let h = 1e-5;
        let r = interp.amplitude(&grid, t).unwrap();
        let plus = interp.amplitude(&grid, t + h).unwrap();
        let minus = interp.amplitude(&grid, t - h).unwrap();
        let dparam = r.dparam.as_ref().unwrap();
        let mut worst = 0.0_f64;
        for i in 0..grid.len() {
            let fd = (plus.values[i] - minus.values[i]) / (2.0 * h);
            worst = worst.max((dparam[i] - fd).abs());
        }
        assert!(worst < 1e-9, "∂ₜr mismatch {worst}");
    }

    #[test]
    fn flux_source_matches_quadrature_of_density_rate() {
        let interp = test_interp();
        let grid = test_grid();
        let t = 27.3;
        let r = interp.amplitude(&grid, t).unwrap();
        let r_dot = r.dparam.as_ref().unwrap();
        let rate: Vec<f64> = r
            .values
            .iter()
            .zip(r_dot)
            .map(|(&v, &d)| 2.0 * v * d)
            .collect();
        let by_quadrature = cumulative_integral_uniform(&rate, grid.dx(), 8);
        let closed = interp.flux_source(&grid, t).unwrap();
        // The quadrature starts at the window edge where the analytic tail
        // is ~1e-40, so the two agree up to that offset.
        let mut worst = 0.0_f64;
        for i in 0..grid.len() {
            worst = worst.max((closed[i] - by_quadrature[i]).abs());
        }
        assert!(worst < 1e-12, "flux source mismatch {worst}");
    }

    #[test]
    fn flux_source_vanishes_in_both_tails() {
        // Zero flux at −∞ by construction; zero at +∞ because the total
        // norm is conserved. A residue of the branch switch at x = 0 would
        // shift the whole right half and break the second property.
        let interp = test_interp();
        let grid = test_grid();
        let last = grid.len() - 1;
        for &t in &[5.0, 27.3, 44.0, 58.0] {
            let s = interp.flux_source(&grid, t).unwrap();
            let scale = s.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
            assert!(scale > 0.0, "source should be active at t = {t}");
            assert!(s[0].abs() < 1e-14 * scale, "left tail at t = {t}");
            assert!(s[last].abs() < 1e-14 * scale, "right tail at t = {t}");
        }
    }

    #[test]
    fn symmetry_of_the_inverted_potential() {
        // The interpolation endpoints are even, so r, φ, V must be even at
        // every stage; checked on a coarse, fast configuration.
        let config = SplittingConfig::<f64> {
            n_points: 256,
            n_steps: 160,
            substeps: 4,
            half_width: 10.0,
            ..SplittingConfig::reference_slow()
        };
        let out = run_splitting(&config).unwrap();
        let grid = out.movie.grid().clone();
        let n = grid.len();
        for &k in &[0usize, 53, 80, 123, 160] {
            let v = out.movie.slice(k);
            let mask = &out.movie.masks[k];
            let phi = &out.phase.phi[k];
            for i in 1..n / 2 {
                let j = n - i; // mirror of i around the center sample n/2
                if !mask[i] || !mask[j] {
                    continue;
                }
                assert!(
                    (v[i] - v[j]).abs() < 1e-9,
                    "V asymmetry at knot {k}, i = {i}"
                );
                assert!(
                    (phi[i] - phi[j]).abs() < 1e-9,
                    "φ asymmetry at knot {k}, i = {i}"
                );
            }
        }
        // Boundary energies vanish in the φ(0,t) = 0 gauge.
        for check in &out.boundary_checks {
            assert_eq!(check.energy, 0.0);
        }
    }

    #[test]
    fn endpoint_potentials_recover_the_stationary_forms() {
        let config = SplittingConfig::<f64> {
            n_points: 256,
            n_steps: 160,
            substeps: 4,
            half_width: 10.0,
            ..SplittingConfig::reference_slow()
        };
        let interp = SplitInterpolation::new(
            config.beta,
            config.separation,
            config.t_f,
            config.ramp_flatness,
        )
        .unwrap();
        let out = run_splitting(&config).unwrap();
        let grid = out.movie.grid().clone();
        let n = grid.len();
        let last = out.movie.n_slices() - 1;

        // The initial slice is a harmonic well plus a constant wherever the
        // state actually lives: least-squares fit c0 + c2 x² and demand a
        // small relative residual there.
        let r0 = interp.amplitude(&grid, 0.0).unwrap();
        let peak = r0.max_abs();
        let populated: Vec<usize> = (0..n)
            .filter(|&i| r0.values[i] > 1e-3 * peak)
            .collect();
        let v0 = out.movie.slice(0);
        let (mut s0, mut s2, mut s4, mut b0, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &i in &populated {
            let x2 = grid.x(i) * grid.x(i);
            s0 += 1.0;
            s2 += x2;
            s4 += x2 * x2;
            b0 += v0[i];
            b2 += v0[i] * x2;
        }
        let det = s0 * s4 - s2 * s2;
        let c0 = (b0 * s4 - b2 * s2) / det;
        let c2 = (s0 * b2 - s2 * b0) / det;
        let spread = populated
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(v0[i]), hi.max(v0[i]))
            });
        let scale = (spread.1 - spread.0).max(1e-300);
        let worst = populated
            .iter()
            .map(|&i| {
                let x2 = grid.x(i) * grid.x(i);
                (v0[i] - c0 - c2 * x2).abs()
            })
            .fold(0.0_f64, f64::max);
        assert!(
            worst / scale < 1e-6,
            "initial slice is not quadratic: rel residual {}",
            worst / scale
        );
        assert!((c2 - 0.5).abs() < 1e-6, "curvature {c2} should be mω²/2");

        // The final slice must agree with the stationary potential implied
        // by the final amplitude alone (zero chemical potential in the
        // φ(0,t) = 0 gauge).
        let rf = interp.amplitude(&grid, config.t_f).unwrap();
        let (v_standard, ok) =
            crate::potential_builder::standard_potential(&rf, 0.0, &config.params, 1e-8);
        let vf = out.movie.slice(last);
        let mask = &out.movie.masks[last];
        let mut gap = 0.0_f64;
        for i in 0..n {
            if mask[i] && ok[i] {
                gap = gap.max((vf[i] - v_standard[i]).abs());
            }
        }
        assert!(gap < 1e-8, "final slice vs stationary form: {gap}");
    }

    #[test]
    fn rejects_a_ramp_that_is_not_flat_enough() {
        assert!(SplitInterpolation::<f64>::new(1.0, 3.0, 10.0, 2).is_err());
    }
}
