//! Assembly of the engineered potential and its consistency certificate.
//!
//! With the phase fixed by the continuity solve, the real part of the
//! inverted Schrödinger equation gives the potential pointwise:
//!
//!   V = -ħ φ̇ + (ħ²/2m)(r″/r - φ′²) - g r²,
//!
//! and the imaginary part, which the phase was constructed to cancel,
//!
//!   Im = ħ ṙ/r + (ħ²/2m)(2 φ′ r′/r + φ″),
//!
//! serves as the no-sink/no-source certificate: it is recomputed here from
//! the *assembled* φ′ (with φ″ taken by finite differences, not from any
//! closed form) so that a bug in the construction shows up as a nonzero
//! residual instead of being defined away.

use crate::domain::{PhysicalParams, ScalarField, SpatialGrid, TimeGrid};
use crate::error::{Error, Result};
use crate::numerics;
use crate::phase_solver::PhaseSlice;
use crate::scalar::{real, Real};
use rayon::prelude::*;
use serde::Serialize;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

/// Stencil for the certificate's φ″ = d(φ′)/dx. Eleventh order keeps the
/// certificate's own truncation error out of the way of the residuals it is
/// meant to expose, even for hurried drives with steep phase profiles.
const CERT_STENCIL: usize = 11;

/// Which construction produced a movie; travels into emitted metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialRoute {
    FastForward,
    InvariantScaling,
    DensityDriven,
}

impl PotentialRoute {
    fn to_tag(self) -> u8 {
        match self {
            PotentialRoute::FastForward => 0,
            PotentialRoute::InvariantScaling => 1,
            PotentialRoute::DensityDriven => 2,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => PotentialRoute::FastForward,
            1 => PotentialRoute::InvariantScaling,
            2 => PotentialRoute::DensityDriven,
            other => {
                return Err(Error::MalformedMovie(format!(
                    "unknown route tag {other}"
                )))
            }
        })
    }
}

/// Real potential on one slice. Points outside the mask (or with vanishing
/// density) take the value of the nearest trusted sample; the movie-level
/// cap later clamps whatever remains.
pub fn real_potential_slice<T: Real>(
    r: &ScalarField<T>,
    phi_x: &[T],
    phi_dot: &[T],
    mask: &[bool],
    params: &PhysicalParams<T>,
) -> Vec<T> {
    let n = r.len();
    assert!(phi_x.len() == n && phi_dot.len() == n && mask.len() == n);
    let d2 = r.d2_samples();
    let half_h2m = real::<T>(0.5) * params.hbar * params.hbar / params.mass;
    let mut v = vec![T::zero(); n];
    let mut ok = vec![false; n];
    for i in 0..n {
        let ri = r.values[i];
        if mask[i] && ri != T::zero() {
            v[i] = -params.hbar * phi_dot[i] + half_h2m * (d2[i] / ri - phi_x[i] * phi_x[i])
                - params.g * ri * ri;
            ok[i] = v[i].is_finite();
        }
    }
    fill_from_nearest_valid(&mut v, &ok);
    v
}

/// Imaginary-part residual of the inverted equation, the certificate that the
/// engineered potential is real. φ″ is formed by finite differences of the
/// assembled φ′ so the check stays independent of any closed-form phase; the
/// differencing runs over the trusted interval only, because φ′ steps down
/// to artificial zeros at the mask edges and a stencil across that step
/// would charge the solution with the mask's own artifact.
pub fn imag_residual_slice<T: Real>(
    r: &ScalarField<T>,
    r_dot: &[T],
    phi_x: &[T],
    mask: &[bool],
    params: &PhysicalParams<T>,
) -> Vec<T> {
    let n = r.len();
    assert!(r_dot.len() == n && phi_x.len() == n && mask.len() == n);
    let d1 = r.d1_samples();
    let mut phi_xx = vec![T::zero(); n];
    if let Some(lo) = mask.iter().position(|&m| m) {
        let hi = n - mask.iter().rev().position(|&m| m).unwrap();
        if hi - lo >= CERT_STENCIL {
            let inner = numerics::derivative_uniform(&phi_x[lo..hi], r.grid().dx(), 1, CERT_STENCIL);
            phi_xx[lo..hi].copy_from_slice(&inner);
        }
    }
    let half_h2m = real::<T>(0.5) * params.hbar * params.hbar / params.mass;
    let two = real::<T>(2.0);
    let mut out = vec![T::zero(); n];
    for i in 0..n {
        let ri = r.values[i];
        if mask[i] && ri != T::zero() {
            out[i] = params.hbar * r_dot[i] / ri
                + half_h2m * (two * phi_x[i] * d1[i] / ri + phi_xx[i]);
        }
    }
    out
}

/// Fast-forward potential on one slice:
/// V = V₀(x; R) - ħ (R̈ θ + Ṙ² ∂θ/∂R) - (ħ²/2m) Ṙ² θ′².
/// `rate` and `accel` are Ṙ(t) and R̈(t); the θ slice must carry its
/// analytic ∂θ/∂R channel.
pub fn ff_potential_slice<T: Real>(
    theta: &PhaseSlice<T>,
    v0: &[T],
    rate: T,
    accel: T,
    params: &PhysicalParams<T>,
) -> Result<Vec<T>> {
    let n = theta.phi.len();
    if v0.len() != n {
        return Err(Error::GridMismatch(
            "base potential length differs from θ slice".into(),
        ));
    }
    let theta_r = theta.phi.dparam.as_ref().ok_or_else(|| {
        Error::InvalidArgument(
            "θ slice lacks a ∂θ/∂R channel; supply one or assemble the phase by time differences"
                .into(),
        )
    })?;
    let theta_x = theta.phi.d1_samples();
    let half_h2m = real::<T>(0.5) * params.hbar * params.hbar / params.mass;
    let rate2 = rate * rate;
    Ok((0..n)
        .map(|i| {
            v0[i] - params.hbar * (accel * theta.phi.values[i] + rate2 * theta_r[i])
                - half_h2m * rate2 * theta_x[i] * theta_x[i]
        })
        .collect())
}

/// Stationary base potential recovered from a stationary amplitude:
/// V₀ = μ + (ħ²/2m) r̃″/r̃ - g r̃². Valid where the density clears the
/// floor; outside, the nearest trusted value is held.
pub fn standard_potential<T: Real>(
    r_tilde: &ScalarField<T>,
    mu: T,
    params: &PhysicalParams<T>,
    floor_rel: T,
) -> (Vec<T>, Vec<bool>) {
    let n = r_tilde.len();
    let d2 = r_tilde.d2_samples();
    let floor = floor_rel * r_tilde.max_abs();
    let half_h2m = real::<T>(0.5) * params.hbar * params.hbar / params.mass;
    let mut v = vec![T::zero(); n];
    let mut ok = vec![false; n];
    for i in 0..n {
        let ri = r_tilde.values[i];
        if ri.abs() > floor {
            v[i] = mu + half_h2m * d2[i] / ri - params.g * ri * ri;
            ok[i] = v[i].is_finite();
        }
    }
    fill_from_nearest_valid(&mut v, &ok);
    (v, ok)
}

/// Chemical potential of a normalized stationary amplitude in `v0`:
/// μ = ∫ [ (ħ²/2m) r̃′² + V₀ r̃² + g r̃⁴ ] dx. For g = 0 this is the energy;
/// with interactions it is the eigenvalue of the stationary nonlinear
/// equation (the full-g quotient, not the energy functional's g/2).
pub fn standard_energy<T: Real>(
    r_tilde: &ScalarField<T>,
    v0: &[T],
    params: &PhysicalParams<T>,
) -> T {
    let n = r_tilde.len();
    assert_eq!(v0.len(), n);
    let d1 = r_tilde.d1_samples();
    let half_h2m = real::<T>(0.5) * params.hbar * params.hbar / params.mass;
    let integrand: Vec<T> = (0..n)
        .map(|i| {
            let ri = r_tilde.values[i];
            half_h2m * d1[i] * d1[i] + v0[i] * ri * ri + params.g * ri * ri * ri * ri
        })
        .collect();
    numerics::uniform_sum(&integrand, r_tilde.grid().dx())
}

fn fill_from_nearest_valid<T: Real>(v: &mut [T], ok: &[bool]) {
    let n = v.len();
    if ok.iter().all(|&b| b) {
        return;
    }
    if !ok.iter().any(|&b| b) {
        for x in v.iter_mut() {
            *x = T::zero();
        }
        return;
    }
    // distance-to-valid sweep in both directions
    let mut nearest: Vec<Option<usize>> = vec![None; n];
    let mut last: Option<usize> = None;
    for i in 0..n {
        if ok[i] {
            last = Some(i);
        }
        nearest[i] = last;
    }
    let mut last: Option<usize> = None;
    for i in (0..n).rev() {
        if ok[i] {
            last = Some(i);
        }
        if let Some(right) = last {
            nearest[i] = match nearest[i] {
                Some(left) if i - left <= right - i => Some(left),
                _ => Some(right),
            };
        }
    }
    for i in 0..n {
        if !ok[i] {
            v[i] = v[nearest[i].unwrap()];
        }
    }
}

/// Local minima of one slice that survive a prominence filter: a minimum
/// counts only if the lower of the two barriers separating it from deeper
/// territory rises at least `prominence` above it. Plateaus are compressed
/// before comparison. Returns the indices of the surviving minima (plateau
/// centers).
pub fn count_potential_minima<T: Real>(values: &[T], prominence: T) -> Vec<usize> {
    let n = values.len();
    if n < 3 {
        return Vec::new();
    }
    // run-length compress equal neighbors
    let mut runs: Vec<(usize, usize, T)> = Vec::new(); // (start, end_exclusive, value)
    let mut start = 0;
    for i in 1..=n {
        if i == n || values[i] != values[start] {
            runs.push((start, i, values[start]));
            start = i;
        }
    }
    let m = runs.len();
    let mut out = Vec::new();
    for (ri, &(s, e, v)) in runs.iter().enumerate() {
        if ri == 0 || ri == m - 1 {
            continue; // window edges never count as wells
        }
        if !(runs[ri - 1].2 > v && runs[ri + 1].2 > v) {
            continue;
        }
        // left barrier: highest value before a strictly deeper run (or edge)
        let mut left_bar = T::zero();
        let mut seen = v;
        for k in (0..ri).rev() {
            let w = runs[k].2;
            if w > seen {
                seen = w;
            }
            if w < v {
                break;
            }
            left_bar = seen - v;
        }
        let mut right_bar = T::zero();
        let mut seen = v;
        for run in runs.iter().skip(ri + 1) {
            let w = run.2;
            if w > seen {
                seen = w;
            }
            if w < v {
                break;
            }
            right_bar = seen - v;
        }
        if left_bar.min(right_bar) >= prominence {
            out.push((s + e - 1) / 2);
        }
    }
    out
}

/// Time-indexed engineered potential, clamped to ±cap, with per-slice trust
/// masks and the construction route recorded.
#[derive(Debug, Clone)]
pub struct PotentialMovie<T> {
    grid: Arc<SpatialGrid<T>>,
    time: TimeGrid<T>,
    /// v[slice][point], already clamped.
    pub v: Vec<Vec<T>>,
    pub masks: Vec<Vec<bool>>,
    pub cap: T,
    pub route: PotentialRoute,
}

impl<T: Real> PotentialMovie<T> {
    pub fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    pub fn time(&self) -> &TimeGrid<T> {
        &self.time
    }

    pub fn n_slices(&self) -> usize {
        self.v.len()
    }

    pub fn slice(&self, k: usize) -> &[T] {
        &self.v[k]
    }

    /// Writes `t,x,value` rows, slice-major, with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,value")?;
        for (k, slice) in self.v.iter().enumerate() {
            let t = self.time.time(k).to_f64().unwrap();
            for (i, &val) in slice.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{}",
                    t,
                    self.grid.x(i).to_f64().unwrap(),
                    val.to_f64().unwrap()
                )?;
            }
        }
        Ok(())
    }

    /// Compact binary store: magic, route tag, shape, window, duration, cap,
    /// then all samples as little-endian f64, slice-major.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(b"STAPMOV1")?;
        w.write_all(&[self.route.to_tag(), 0, 0, 0, 0, 0, 0, 0])?;
        w.write_all(&(self.v.len() as u64).to_le_bytes())?;
        w.write_all(&(self.grid.len() as u64).to_le_bytes())?;
        for val in [
            self.grid.x_min().to_f64().unwrap(),
            self.grid.x_max().to_f64().unwrap(),
            self.time.t_f().to_f64().unwrap(),
            self.cap.to_f64().unwrap(),
        ] {
            w.write_all(&val.to_le_bytes())?;
        }
        for slice in &self.v {
            for &val in slice {
                w.write_all(&val.to_f64().unwrap().to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a movie written by [`Self::write_binary`]. Masks are not stored;
    /// the loaded movie trusts every sample.
    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut rdr = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        rdr.read_exact(&mut magic)
            .map_err(|_| Error::MalformedMovie("file shorter than its header".into()))?;
        if &magic != b"STAPMOV1" {
            return Err(Error::MalformedMovie("bad magic".into()));
        }
        let mut tag = [0u8; 8];
        rdr.read_exact(&mut tag)
            .map_err(|_| Error::MalformedMovie("missing route tag".into()))?;
        let route = PotentialRoute::from_tag(tag[0])?;
        let mut u = [0u8; 8];
        rdr.read_exact(&mut u)
            .map_err(|_| Error::MalformedMovie("missing slice count".into()))?;
        let n_slices = u64::from_le_bytes(u) as usize;
        rdr.read_exact(&mut u)
            .map_err(|_| Error::MalformedMovie("missing point count".into()))?;
        let n_points = u64::from_le_bytes(u) as usize;
        if n_slices < 2 || n_slices > (1 << 24) || n_points > (1 << 24) {
            return Err(Error::MalformedMovie(format!(
                "implausible shape {n_slices} x {n_points}"
            )));
        }
        let mut f = [0u8; 8];
        let mut next_f64 = |what: &str| -> Result<f64> {
            rdr.read_exact(&mut f)
                .map_err(|_| Error::MalformedMovie(format!("missing {what}")))?;
            Ok(f64::from_le_bytes(f))
        };
        let x_min = next_f64("x_min")?;
        let x_max = next_f64("x_max")?;
        let t_f = next_f64("t_f")?;
        let cap = next_f64("cap")?;
        let grid = SpatialGrid::new(real::<T>(x_min), real::<T>(x_max), n_points)
            .map_err(|e| Error::MalformedMovie(format!("bad grid in header: {e}")))?;
        let time = TimeGrid::new(real::<T>(t_f), n_slices - 1)
            .map_err(|e| Error::MalformedMovie(format!("bad time grid in header: {e}")))?;
        let mut v = Vec::with_capacity(n_slices);
        for k in 0..n_slices {
            let mut slice = Vec::with_capacity(n_points);
            for i in 0..n_points {
                rdr.read_exact(&mut f).map_err(|_| {
                    Error::MalformedMovie(format!("truncated at slice {k}, point {i}"))
                })?;
                slice.push(real::<T>(f64::from_le_bytes(f)));
            }
            v.push(slice);
        }
        let masks = vec![vec![true; n_points]; n_slices];
        Ok(PotentialMovie {
            grid: Arc::new(grid),
            time,
            v,
            masks,
            cap: real::<T>(cap),
            route,
        })
    }
}

/// Builds a movie by evaluating `slice_fn(k) -> (V_k, mask_k)` on every knot
/// in parallel and clamping to ±cap.
pub fn build_potential_movie<T, F>(
    grid: &Arc<SpatialGrid<T>>,
    time: &TimeGrid<T>,
    cap: T,
    route: PotentialRoute,
    slice_fn: F,
) -> Result<PotentialMovie<T>>
where
    T: Real,
    F: Fn(usize) -> Result<(Vec<T>, Vec<bool>)> + Sync,
{
    if !(cap > T::zero()) {
        return Err(Error::InvalidArgument("cap must be positive".into()));
    }
    let n = grid.len();
    let slices: Vec<(Vec<T>, Vec<bool>)> = (0..time.n_slices())
        .into_par_iter()
        .map(|k| {
            let (mut v, mask) = slice_fn(k)?;
            if v.len() != n || mask.len() != n {
                return Err(Error::GridMismatch(format!(
                    "slice {k} has wrong length"
                )));
            }
            for x in &mut v {
                *x = (*x).max(-cap).min(cap);
            }
            Ok((v, mask))
        })
        .collect::<Result<_>>()?;
    let (v, masks) = slices.into_iter().unzip();
    Ok(PotentialMovie {
        grid: Arc::clone(grid),
        time: time.clone(),
        v,
        masks,
        cap,
        route,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{PhysicalParams, ScalarField, SpatialGrid, TimeGrid};
    use crate::phase_solver::{solve_theta, PhaseSliceOptions, PhaseSource};
    use approx::assert_relative_eq;

    fn grid(n: usize, half: f64) -> Arc<SpatialGrid<f64>> {
        Arc::new(SpatialGrid::symmetric(half, n).unwrap())
    }

    fn gauss_ground(g: &SpatialGrid<f64>, omega: f64) -> ScalarField<f64> {
        let beta2 = omega; // m = hbar = 1
        ScalarField::analytic(
            Arc::new(g.clone()),
            move |x| (beta2 / std::f64::consts::PI).powf(0.25) * (-0.5 * beta2 * x * x).exp(),
            Some(&move |x| {
                -beta2 * x * (beta2 / std::f64::consts::PI).powf(0.25)
                    * (-0.5 * beta2 * x * x).exp()
            }),
            Some(&move |x| {
                (beta2 * beta2 * x * x - beta2)
                    * (beta2 / std::f64::consts::PI).powf(0.25)
                    * (-0.5 * beta2 * x * x).exp()
            }),
            None,
        )
    }

    #[test]
    fn static_eigenstate_inverts_to_its_trap() {
        let g = grid(256, 10.0);
        let params = PhysicalParams::natural(0.0);
        let omega = 0.7f64;
        let r = gauss_ground(&g, omega);
        let phi_x = vec![0.0; 256];
        let phi_dot = vec![-0.5 * omega; 256]; // φ̇ = -E/ħ
        let mask = vec![true; 256];
        let v = real_potential_slice(&r, &phi_x, &phi_dot, &mask, &params);
        for (i, &x) in g.points().iter().enumerate() {
            assert!(
                (v[i] - 0.5 * omega * omega * x * x).abs() < 1e-11,
                "V at {x}: {}",
                v[i]
            );
        }
    }

    #[test]
    fn breathing_gaussian_certificate_is_clean() {
        // r(x,t) = (π w²)^{-1/4} exp(-x²/(2w²)) with w(t); the cumulative
        // source is derivable via erf in closed form, so φ′ is exact in the
        // tails and the imaginary residual must vanish to rounding.
        let g = grid(512, 12.0);
        let params = PhysicalParams::natural(0.0);
        let w = 1.2f64;
        let w_dot = 0.41f64;
        let norm = (std::f64::consts::PI * w * w).powf(-0.25);
        let r = ScalarField::analytic(
            Arc::clone(&g),
            move |x| norm * (-0.5 * x * x / (w * w)).exp(),
            Some(&move |x| -x / (w * w) * norm * (-0.5 * x * x / (w * w)).exp()),
            None,
            None,
        );
        // d/dt of the amplitude under w -> w + ẇ dt
        let r_dot: Vec<f64> = g
            .points()
            .iter()
            .map(|&x| {
                norm * (-0.5 * x * x / (w * w)).exp() * (x * x / (w * w) - 0.5) * w_dot / w
            })
            .collect();
        // S(x) = ∂_t ∫ r² = -ẇ/(√π w²) x e^{-x²/w²}  (normalized density)
        let source: Vec<f64> = g
            .points()
            .iter()
            .map(|&x| -w_dot / (std::f64::consts::PI.sqrt() * w * w) * x * (-x * x / (w * w)).exp())
            .collect();
        let opts = PhaseSliceOptions {
            density_floor_rel: 0.0,
            ..Default::default()
        };
        let slice = solve_theta(&r, PhaseSource::Cumulative(&source), &params, &opts).unwrap();
        let phi_x = slice.phi.d1_samples();
        // sanity: the velocity field is ẇ x / w
        assert_relative_eq!(phi_x[300], w_dot * g.x(300) / w, max_relative = 1e-10);
        let mask = vec![true; 512];
        let im = imag_residual_slice(&r, &r_dot, &phi_x, &mask, &params);
        let worst = im.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(worst < 1e-10, "imaginary residual {worst}");
    }

    #[test]
    fn ff_slice_matches_closed_form_for_oscillator_family() {
        let g = grid(256, 14.0);
        let params = PhysicalParams::natural(0.0);
        let drive = 0.62f64;
        let rate = -0.31f64;
        let accel = 0.17f64;
        let beta = drive.sqrt();
        let r = ScalarField::analytic(
            Arc::clone(&g),
            move |x| (beta * beta / std::f64::consts::PI).powf(0.25) * (-0.5 * beta * beta * x * x).exp(),
            None,
            None,
            None,
        );
        let source: Vec<f64> = g
            .points()
            .iter()
            .map(|&x| {
                (-beta * beta * x * x).exp() / std::f64::consts::PI.sqrt() * x * beta / (2.0 * drive)
            })
            .collect();
        let opts = PhaseSliceOptions {
            density_floor_rel: 0.0,
            ..Default::default()
        };
        let mut theta = solve_theta(&r, PhaseSource::Cumulative(&source), &params, &opts).unwrap();
        theta.phi = theta
            .phi
            .with_dparam(g.points().iter().map(|&x| x * x / (4.0 * drive * drive)).collect());
        let v0: Vec<f64> = g.points().iter().map(|&x| 0.5 * drive * drive * x * x).collect();
        let v = ff_potential_slice(&theta, &v0, rate, accel, &params).unwrap();
        // closed form: (x²/2)(R² + R̈/(2R) - (3/4) Ṙ²/R²)
        let coef = drive * drive + accel / (2.0 * drive) - 0.75 * rate * rate / (drive * drive);
        for (i, &x) in g.points().iter().enumerate() {
            assert!(
                (v[i] - 0.5 * coef * x * x).abs() < 1e-10,
                "at {x}: {} vs {}",
                v[i],
                0.5 * coef * x * x
            );
        }
    }

    #[test]
    fn ff_slice_requires_drive_derivative_channel() {
        let g = grid(256, 14.0);
        let params = PhysicalParams::natural(0.0);
        let r = gauss_ground(&g, 1.0);
        let source = vec![0.0; 256];
        let theta = solve_theta(
            &r,
            PhaseSource::Cumulative(&source),
            &params,
            &PhaseSliceOptions::default(),
        )
        .unwrap();
        let v0 = vec![0.0; 256];
        assert!(ff_potential_slice(&theta, &v0, 0.1, 0.0, &params).is_err());
    }

    #[test]
    fn uniform_phase_rate_shifts_potential_uniformly() {
        let g = grid(256, 10.0);
        let params = PhysicalParams::natural(0.0);
        let r = gauss_ground(&g, 1.0);
        let phi_x = vec![0.0; 256];
        let mask = vec![true; 256];
        let base = real_potential_slice(&r, &phi_x, &vec![-0.5; 256], &mask, &params);
        let shifted = real_potential_slice(&r, &phi_x, &vec![-0.5 + 0.33; 256], &mask, &params);
        for i in 0..256 {
            assert_relative_eq!(shifted[i] - base[i], -0.33, epsilon = 1e-12);
        }
    }

    #[test]
    fn standard_route_recovers_trap_and_chemical_potential() {
        let g = grid(512, 12.0);
        let gq = 1e-3f64;
        let params = PhysicalParams::natural(gq);
        let r = gauss_ground(&g, 1.0);
        // Rayleigh quotient in the known trap: μ = 1/2 + g/√(2π) + O(g²)
        let v0: Vec<f64> = g.points().iter().map(|&x| 0.5 * x * x).collect();
        let mu = standard_energy(&r, &v0, &params);
        let mu_expect = 0.5 + gq / (2.0 * std::f64::consts::PI).sqrt();
        assert!((mu - mu_expect).abs() < 1e-6 * gq + 1e-12, "μ = {mu}");
        // Inverting the same amplitude at g = 0 reproduces the trap inside
        // the mask.
        let lin = PhysicalParams::natural(0.0);
        let (v, ok) = standard_potential(&r, 0.5, &lin, 1e-9);
        for (i, &x) in g.points().iter().enumerate() {
            if ok[i] {
                assert!((v[i] - 0.5 * x * x).abs() < 1e-9, "V₀ at {x}: {}", v[i]);
            }
        }
    }

    #[test]
    fn minima_counting_respects_prominence() {
        let n = 513;
        let xs: Vec<f64> = (0..n).map(|i| -6.0 + 12.0 * i as f64 / (n - 1) as f64).collect();
        // double well with a narrow, shallow central dimple (prominence
        // ~0.036: a real minimum, but far below the deep-well scale)
        let v: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let well = 0.05 * (x * x - 9.0).powi(2) / 9.0;
                let dimple = -0.05 * (-(x * x) * 25.0).exp();
                well + dimple
            })
            .collect();
        let deep = count_potential_minima(&v, 0.05);
        assert_eq!(deep.len(), 2, "only the two deep wells clear 0.05");
        let shallow = count_potential_minima(&v, 0.001);
        assert_eq!(shallow.len(), 3, "the central dimple appears at 0.001");
        // plateau bottom counts once, at its center
        let mut plateau = vec![1.0f64; 64];
        for v in plateau.iter_mut().take(40).skip(30) {
            *v = 0.0;
        }
        let p = count_potential_minima(&plateau, 0.5);
        assert_eq!(p, vec![34]);
    }

    #[test]
    fn movie_build_clamps_and_round_trips_binary() {
        let g = grid(32, 4.0);
        let time = TimeGrid::new(1.0f64, 7).unwrap();
        let movie = build_potential_movie(&g, &time, 10.0, PotentialRoute::DensityDriven, |k| {
            let v: Vec<f64> = g
                .points()
                .iter()
                .map(|&x| (k as f64) * x * x) // exceeds the cap at the edges for late k
                .collect();
            Ok((v, vec![true; 32]))
        })
        .unwrap();
        assert_eq!(movie.n_slices(), 8);
        let worst = movie
            .v
            .iter()
            .flatten()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(worst <= 10.0);
        assert!(movie.v[7].iter().any(|&v| v == 10.0), "cap engaged");

        let dir = std::env::temp_dir().join("stap-movie-roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("movie.bin");
        movie.write_binary(&path).unwrap();
        let back = PotentialMovie::<f64>::read_binary(&path).unwrap();
        assert_eq!(back.n_slices(), movie.n_slices());
        assert_eq!(back.route, movie.route);
        assert_eq!(back.grid().len(), 32);
        for k in 0..8 {
            for i in 0..32 {
                assert_eq!(back.v[k][i], movie.v[k][i]);
            }
        }
        // malformed: wrong magic
        let bad = dir.join("bad.bin");
        std::fs::write(&bad, b"NOTAMOVIExxxxxxxxxxxxxxxxxxx").unwrap();
        assert!(matches!(
            PotentialMovie::<f64>::read_binary(&bad),
            Err(Error::MalformedMovie(_))
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn csv_layout_is_slice_major_with_header() {
        let g = grid(16, 2.0);
        let time = TimeGrid::new(0.5f64, 2).unwrap();
        let movie = build_potential_movie(&g, &time, 1e3, PotentialRoute::FastForward, |_| {
            Ok((vec![1.5f64; 16], vec![true; 16]))
        })
        .unwrap();
        let mut buf = Vec::new();
        movie.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,value");
        assert_eq!(lines.len(), 1 + 3 * 16);
        assert_eq!(lines[1], "0,-2,1.5");
        let last: Vec<&str> = lines.last().unwrap().split(',').collect();
        assert_eq!(last[0], "0.5");
    }
}
