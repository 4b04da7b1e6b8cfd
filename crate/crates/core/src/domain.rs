//! Grids, sampled fields, physical parameters, and the boundary-flat
//! polynomial ramps that drive every schedule in the crate.

use crate::error::{Error, Result};
use crate::numerics;
use crate::scalar::{real, Real};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Label recording which unit convention a parameter set was written in.
/// Internals always run ħ = m = 1; the label travels into emitted metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    Natural,
    Si,
}

/// Mass, ħ, and the cubic-nonlinearity strength g (g = 0 is the linear
/// Schrödinger equation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalParams<T> {
    pub hbar: T,
    pub mass: T,
    pub g: T,
    pub units: UnitSystem,
}

impl<T: Real> PhysicalParams<T> {
    /// Natural units: ħ = m = 1.
    pub fn natural(g: T) -> Self {
        PhysicalParams {
            hbar: T::one(),
            mass: T::one(),
            g,
            units: UnitSystem::Natural,
        }
    }

    pub fn new(hbar: T, mass: T, g: T, units: UnitSystem) -> Result<Self> {
        if !(hbar > T::zero()) || !(mass > T::zero()) {
            return Err(Error::InvalidArgument(
                "hbar and mass must be positive and finite".into(),
            ));
        }
        Ok(PhysicalParams {
            hbar,
            mass,
            g,
            units,
        })
    }
}

/// Conversion factors between natural units (ħ = m = 1, frequency ω) and SI.
///
/// Lengths scale by `x0 = sqrt(ħ/(mω))`, times by `t0 = 1/ω`, energies by
/// `e0 = ħω`. Only the CLI boundary converts; the solvers never see SI.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UnitScales {
    pub x0_m: f64,
    pub t0_s: f64,
    pub e0_j: f64,
}

pub const HBAR_SI: f64 = 1.054_571_817e-34;

impl UnitScales {
    /// Scales for a particle of mass `mass_kg` in a reference trap of angular
    /// frequency `omega_rad_s`.
    pub fn new(mass_kg: f64, omega_rad_s: f64) -> Result<Self> {
        if !(mass_kg > 0.0) || !(omega_rad_s > 0.0) {
            return Err(Error::InvalidArgument(
                "mass and reference frequency must be positive".into(),
            ));
        }
        Ok(UnitScales {
            x0_m: (HBAR_SI / (mass_kg * omega_rad_s)).sqrt(),
            t0_s: 1.0 / omega_rad_s,
            e0_j: HBAR_SI * omega_rad_s,
        })
    }
}

/// Uniform periodic spatial grid: `x_i = x_min + i*dx`, `dx = (x_max-x_min)/n`,
/// with `x_max` excluded (it aliases `x_min` under the periodic wrap the
/// spectral propagator assumes). For a symmetric window `[-L, L)` with `n`
/// even, `x = 0` is the sample at `i = n/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialGrid<T> {
    x_min: T,
    x_max: T,
    n_points: usize,
    dx: T,
}

impl<T: Real> SpatialGrid<T> {
    /// `n_points` must be a power of two, at least 16.
    pub fn new(x_min: T, x_max: T, n_points: usize) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(Error::InvalidArgument(format!(
                "spatial window is empty: x_min = {:?}, x_max = {:?}",
                x_min, x_max
            )));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        let dx = (x_max - x_min) / T::from_usize(n_points).unwrap();
        Ok(SpatialGrid {
            x_min,
            x_max,
            n_points,
            dx,
        })
    }

    /// Symmetric window `[-half_width, half_width)`.
    pub fn symmetric(half_width: T, n_points: usize) -> Result<Self> {
        SpatialGrid::new(-half_width, half_width, n_points)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    /// Periodic length of the domain.
    pub fn period(&self) -> T {
        self.x_max - self.x_min
    }

    pub fn x(&self, i: usize) -> T {
        self.x_min + T::from_usize(i).unwrap() * self.dx
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Index of the sample nearest to `x`.
    pub fn index_nearest(&self, x: T) -> usize {
        let raw = ((x - self.x_min) / self.dx).round();
        let raw = raw.max(T::zero());
        (raw.to_usize().unwrap_or(0)).min(self.n_points - 1)
    }
}

/// Uniform time grid: `dt = t_f/n_steps`; movies sampled on it carry
/// `n_steps + 1` slices, one per knot `t_k = k*dt` including both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid<T> {
    t_f: T,
    n_steps: usize,
    dt: T,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_f: T, n_steps: usize) -> Result<Self> {
        if !(t_f > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "t_f must be positive, got {:?}",
                t_f
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be nonzero".into()));
        }
        let dt = t_f / T::from_usize(n_steps).unwrap();
        Ok(TimeGrid { t_f, n_steps, dt })
    }

    pub fn t_f(&self) -> T {
        self.t_f
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of knots, `n_steps + 1`.
    pub fn n_slices(&self) -> usize {
        self.n_steps + 1
    }

    /// Knot time `t_k`; the last knot is exactly `t_f`.
    pub fn time(&self, k: usize) -> T {
        if k >= self.n_steps {
            self.t_f
        } else {
            T::from_usize(k).unwrap() * self.dt
        }
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.n_slices()).map(|k| self.time(k)).collect()
    }
}

/// Where a field's samples came from; analytic fields carry trustworthy
/// derivative channels, sampled ones fall back to finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldProvenance {
    Analytic,
    Sampled,
}

/// Real field on a [`SpatialGrid`] with optional co-sampled analytic
/// derivative channels: first/second spatial derivatives and the derivative
/// with respect to the evolution parameter (time t, or the drive R for
/// scaling families).
#[derive(Debug, Clone)]
pub struct ScalarField<T> {
    grid: Arc<SpatialGrid<T>>,
    pub values: Vec<T>,
    pub d1: Option<Vec<T>>,
    pub d2: Option<Vec<T>>,
    pub dparam: Option<Vec<T>>,
    pub provenance: FieldProvenance,
}

impl<T: Real> ScalarField<T> {
    pub fn sampled(grid: Arc<SpatialGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} samples on a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField {
            grid,
            values,
            d1: None,
            d2: None,
            dparam: None,
            provenance: FieldProvenance::Sampled,
        })
    }

    /// Builds from per-point closures for the value and its channels.
    pub fn analytic(
        grid: Arc<SpatialGrid<T>>,
        f: impl Fn(T) -> T,
        d1: Option<&dyn Fn(T) -> T>,
        d2: Option<&dyn Fn(T) -> T>,
        dparam: Option<&dyn Fn(T) -> T>,
    ) -> Self {
        let xs = grid.points();
        let sample = |g: &dyn Fn(T) -> T| xs.iter().map(|&x| g(x)).collect::<Vec<_>>();
        ScalarField {
            values: xs.iter().map(|&x| f(x)).collect(),
            d1: d1.map(sample),
            d2: d2.map(sample),
            dparam: dparam.map(sample),
            grid,
            provenance: FieldProvenance::Analytic,
        }
    }

    pub fn with_d1(mut self, d1: Vec<T>) -> Self {
        assert_eq!(d1.len(), self.values.len());
        self.d1 = Some(d1);
        self
    }

    pub fn with_d2(mut self, d2: Vec<T>) -> Self {
        assert_eq!(d2.len(), self.values.len());
        self.d2 = Some(d2);
        self
    }

    pub fn with_dparam(mut self, dparam: Vec<T>) -> Self {
        assert_eq!(dparam.len(), self.values.len());
        self.dparam = Some(dparam);
        self
    }

    pub fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// First spatial derivative: analytic channel if present, else a centered
    /// fourth-order five-point stencil.
    pub fn d1_samples(&self) -> Vec<T> {
        match &self.d1 {
            Some(d) => d.clone(),
            None => numerics::derivative_uniform(&self.values, self.grid.dx(), 1, 5),
        }
    }

    /// Second spatial derivative: analytic channel if present, else a centered
    /// fourth-order five-point stencil.
    pub fn d2_samples(&self) -> Vec<T> {
        match &self.d2 {
            Some(d) => d.clone(),
            None => numerics::derivative_uniform(&self.values, self.grid.dx(), 2, 5),
        }
    }
}

/// Point-wise validity mask: `true` where `|r|` is at or above
/// `rel_floor * max|r|`. Everything below is treated as vacuum when building
/// and certifying potentials.
pub fn density_mask<T: Real>(values: &[T], rel_floor: T) -> Vec<bool> {
    let max = values.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let floor = rel_floor * max;
    values.iter().map(|&v| v.abs() >= floor).collect()
}

/// Complex wavefunction samples on a [`SpatialGrid`] at one instant.
#[derive(Debug, Clone)]
pub struct WaveState<T> {
    grid: Arc<SpatialGrid<T>>,
    pub psi: Vec<Complex<T>>,
    pub t: T,
}

impl<T: Real> WaveState<T> {
    pub fn new(grid: Arc<SpatialGrid<T>>, psi: Vec<Complex<T>>, t: T) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "state has {} samples on a grid of {} points",
                psi.len(),
                grid.len()
            )));
        }
        Ok(WaveState { grid, psi, t })
    }

    /// Real nonnegative amplitude lifted to a complex state with zero phase.
    pub fn from_amplitude(field: &ScalarField<T>, t: T) -> Self {
        WaveState {
            grid: Arc::clone(field.grid()),
            psi: field
                .values
                .iter()
                .map(|&r| Complex::new(r, T::zero()))
                .collect(),
            t,
        }
    }

    /// Amplitude and phase samples combined into r e^{i phi}.
    pub fn from_polar(amplitude: &ScalarField<T>, phase: &[T], t: T) -> Result<Self> {
        if phase.len() != amplitude.len() {
            return Err(Error::GridMismatch(
                "amplitude and phase sample counts differ".into(),
            ));
        }
        Ok(WaveState {
            grid: Arc::clone(amplitude.grid()),
            psi: amplitude
                .values
                .iter()
                .zip(phase)
                .map(|(&r, &p)| Complex::from_polar(r, p))
                .collect(),
            t,
        })
    }

    pub fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    /// L2 norm under the periodic rectangle rule.
    pub fn norm(&self) -> T {
        let dx = self.grid.dx();
        (self.psi.iter().map(|c| c.norm_sqr()).sum::<T>() * dx).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > T::zero() {
            let inv = T::one() / n;
            for c in &mut self.psi {
                *c = *c * inv;
            }
        }
    }

    pub fn density(&self) -> Vec<T> {
        self.psi.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Polynomial ramp P on [0,1] with P(0) = 0, P(1) = 1, and derivatives
/// 1..=flatness vanishing at both ends. `degree = 2*flatness + 1`;
/// flatness 2 gives 10s^3 - 15s^4 + 6s^5, flatness 3 gives
/// 35s^4 - 84s^5 + 70s^6 - 20s^7.
#[derive(Debug, Clone, PartialEq)]
pub struct RampPolynomial<T> {
    coeffs: Vec<T>,
    flatness: usize,
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Builds the minimal-degree ramp with the requested boundary flatness.
/// Errors unless `degree == 2*flatness + 1`.
pub fn make_ramp<T: Real>(degree: usize, flatness: usize) -> Result<RampPolynomial<T>> {
    if flatness == 0 || degree != 2 * flatness + 1 {
        return Err(Error::InvalidArgument(format!(
            "ramp needs degree = 2*flatness + 1 with flatness >= 1, got degree {degree}, flatness {flatness}"
        )));
    }
    let k = flatness as u64;
    let mut coeffs = vec![T::zero(); degree + 1];
    // P(s) = s^{k+1} * sum_{j=0..k} C(k+j, j) C(2k+1, k-j) (-s)^j
    for j in 0..=k {
        let mag = binomial(k + j, j) * binomial(2 * k + 1, k - j);
        let mut c = T::from_u128(mag).expect("ramp coefficient fits the scalar type");
        if j % 2 == 1 {
            c = -c;
        }
        coeffs[(k + 1 + j) as usize] = c;
    }
    Ok(RampPolynomial { coeffs, flatness })
}

impl<T: Real> RampPolynomial<T> {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn flatness(&self) -> usize {
        self.flatness
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    /// `order`-th derivative with respect to s, at s in [0,1].
    pub fn eval(&self, s: T, order: usize) -> Result<T> {
        let eps = real::<T>(1e-12);
        if s < -eps || s > T::one() + eps {
            return Err(Error::InvalidArgument(format!(
                "ramp argument outside [0,1]: {:?}",
                s
            )));
        }
        let s = s.max(T::zero()).min(T::one());
        if order > self.degree() {
            return Ok(T::zero());
        }
        // Horner on the derivative's coefficients, highest power first.
        let mut acc = T::zero();
        for i in (order..self.coeffs.len()).rev() {
            let mut fall = T::one();
            for q in 0..order {
                fall = fall * T::from_usize(i - q).unwrap();
            }
            acc = acc * s + self.coeffs[i] * fall;
        }
        Ok(acc)
    }
}

/// `order`-th time derivative of `P(t/t_f)`; errors when t is outside
/// `[0, t_f]`.
pub fn eval_ramp<T: Real>(ramp: &RampPolynomial<T>, t: T, t_f: T, order: usize) -> Result<T> {
    if !(t_f > T::zero()) {
        return Err(Error::InvalidArgument("t_f must be positive".into()));
    }
    let scale = (T::one() / t_f).powi(order as i32);
    Ok(ramp.eval(t / t_f, order)? * scale)
}
