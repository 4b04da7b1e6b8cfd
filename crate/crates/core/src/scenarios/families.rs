//! Closed-form Hermite-Gauss families for a harmonic trap of drive ℛ.
//!
//! The stationary amplitudes of a trap ½mℛ²x² are r̃_n(x;ℛ) = √β hg_n(βx)
//! with β = √(mℛ/ħ) and hg_n the unit-normalized Hermite-Gauss function.
//! Everything the inverse construction needs is available in closed form:
//! the amplitude with spatial and drive derivatives, the flux source that
//! feeds the phase equation, and the mode energy (n + ½)ħℛ.

use std::sync::Arc;

use crate::domain::{PhysicalParams, ScalarField, SpatialGrid};
use crate::error::Result;
use crate::scalar::{real, Real};

/// Unit-normalized Hermite-Gauss value hg_n(y) = H_n(y) e^{-y²/2} / √(2ⁿ n! √π).
///
/// Evaluated by upward recurrence on the normalized functions themselves,
/// which keeps every intermediate bounded (no raw Hermite overflow).
pub fn hermite_gauss<T: Real>(n: usize, y: T) -> T {
    hermite_gauss_pair(n, y).0
}

/// Returns (hg_n(y), hg_{n-1}(y)); the second entry is zero for n = 0.
pub fn hermite_gauss_pair<T: Real>(n: usize, y: T) -> (T, T) {
    let gauss = (-y * y / real::<T>(2.0)).exp();
    let h0 = real::<T>(std::f64::consts::PI).powf(real::<T>(-0.25)) * gauss;
    if n == 0 {
        return (h0, T::zero());
    }
    let mut below = h0;
    let mut here = real::<T>(std::f64::consts::SQRT_2) * y * h0;
    for k in 2..=n {
        let kf = real::<T>(k as f64);
        let next = y * (real::<T>(2.0) / kf).sqrt() * here
            - ((kf - T::one()) / kf).sqrt() * below;
        below = here;
        here = next;
    }
    (here, below)
}

/// Derivative hg_n'(y) = √(2n) hg_{n-1}(y) - y hg_n(y).
pub fn hermite_gauss_d1<T: Real>(n: usize, y: T) -> T {
    let (here, below) = hermite_gauss_pair(n, y);
    if n == 0 {
        -y * here
    } else {
        (real::<T>(2.0) * real::<T>(n as f64)).sqrt() * below - y * here
    }
}

/// One stationary mode of the instantaneous trap, with every derivative
/// channel the downstream construction consumes.
#[derive(Debug, Clone, Copy)]
pub struct HermiteMode {
    /// Mode index n ≥ 0.
    pub n: usize,
}

impl HermiteMode {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    /// Inverse width β(ℛ) = √(mℛ/ħ) of the instantaneous ground Gaussian.
    pub fn beta<T: Real>(&self, drive: T, params: &PhysicalParams<T>) -> T {
        (params.mass * drive / params.hbar).sqrt()
    }

    /// Mode energy (n + ½) ħℛ.
    pub fn energy<T: Real>(&self, drive: T, params: &PhysicalParams<T>) -> T {
        (real::<T>(self.n as f64) + real::<T>(0.5)) * params.hbar * drive
    }

    /// Amplitude r̃_n(x;ℛ) = √β hg_n(βx) sampled on the grid, carrying
    /// analytic first and second spatial derivatives plus the drive
    /// derivative ∂r̃/∂ℛ.
    pub fn amplitude<T: Real>(
        &self,
        grid: &Arc<SpatialGrid<T>>,
        drive: T,
        params: &PhysicalParams<T>,
    ) -> Result<ScalarField<T>> {
        let beta = self.beta(drive, params);
        let sqrt_beta = beta.sqrt();
        let n = self.n;
        let two_n_plus_1 = real::<T>(2.0 * n as f64 + 1.0);
        let half = real::<T>(0.5);

        let mut values = Vec::with_capacity(grid.len());
        let mut d1 = Vec::with_capacity(grid.len());
        let mut d2 = Vec::with_capacity(grid.len());
        let mut dparam = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let y = beta * grid.x(i);
            let hg = hermite_gauss(n, y);
            let hg_p = hermite_gauss_d1(n, y);
            values.push(sqrt_beta * hg);
            d1.push(sqrt_beta * beta * hg_p);
            // hg_n'' = (y² - 2n - 1) hg_n from the Hermite equation.
            d2.push(sqrt_beta * beta * beta * (y * y - two_n_plus_1) * hg);
            // ∂_ℛ(√β hg(βx)) with ∂β/∂ℛ = β/(2ℛ).
            dparam.push(sqrt_beta / (real::<T>(2.0) * drive) * (half * hg + y * hg_p));
        }

        Ok(ScalarField::sampled(Arc::clone(grid), values)?
            .with_d1(d1)
            .with_d2(d2)
            .with_dparam(dparam))
    }

    /// Cumulative flux source S_θ(x) = ∂_ℛ ∫_{-∞}^{x} r̃² dx' for this mode,
    /// in closed form: S_θ(x) = (βx / 2ℛ) hg_n²(βx).
    pub fn theta_source<T: Real>(
        &self,
        grid: &SpatialGrid<T>,
        drive: T,
        params: &PhysicalParams<T>,
    ) -> Vec<T> {
        let beta = self.beta(drive, params);
        let two_drive = real::<T>(2.0) * drive;
        (0..grid.len())
            .map(|i| {
                let y = beta * grid.x(i);
                let hg = hermite_gauss(self.n, y);
                y * hg * hg / two_drive
            })
            .collect()
    }

    /// Closed-form auxiliary phase θ(x;ℛ) = -m x² / (4ħℛ), mode independent.
    pub fn theta_closed_form<T: Real>(x: T, drive: T, params: &PhysicalParams<T>) -> T {
        -params.mass * x * x / (real::<T>(4.0) * params.hbar * drive)
    }

    /// Drive derivative ∂θ/∂ℛ = +m x² / (4ħℛ²) of the closed-form phase.
    pub fn theta_drive_derivative<T: Real>(x: T, drive: T, params: &PhysicalParams<T>) -> T {
        params.mass * x * x / (real::<T>(4.0) * params.hbar * drive * drive)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{PhysicalParams, SpatialGrid};
    use crate::numerics::trapezoid;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_gauss_matches_low_order_closed_forms() {
        let quarter_pi = std::f64::consts::PI.powf(-0.25);
        for &y in &[-2.3_f64, -0.7, 0.0, 0.41, 1.9] {
            let g = (-y * y / 2.0).exp();
            assert_relative_eq!(hermite_gauss(0, y), quarter_pi * g, max_relative = 1e-14);
            assert_relative_eq!(
                hermite_gauss(1, y),
                quarter_pi * std::f64::consts::SQRT_2 * y * g,
                max_relative = 1e-13,
                epsilon = 1e-15
            );
            // hg_2 = (2y² - 1) / √2 · π^{-1/4} e^{-y²/2}
            assert_relative_eq!(
                hermite_gauss(2, y),
                quarter_pi * (2.0 * y * y - 1.0) / std::f64::consts::SQRT_2 * g,
                max_relative = 1e-13,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn modes_are_orthonormal_under_quadrature() {
        let grid = Arc::new(SpatialGrid::symmetric(12.0, 1024).unwrap());
        let params = PhysicalParams::natural(0.0);
        let fields: Vec<_> = (0..4)
            .map(|n| {
                HermiteMode::new(n)
                    .amplitude(&grid, 1.7_f64, &params)
                    .unwrap()
            })
            .collect();
        for (i, a) in fields.iter().enumerate() {
            for (j, b) in fields.iter().enumerate() {
                let prod: Vec<f64> = a
                    .values
                    .iter()
                    .zip(&b.values)
                    .map(|(&u, &v)| u * v)
                    .collect();
                let overlap = trapezoid(&prod, grid.dx());
                let expect: f64 = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (overlap - expect).abs() < 1e-12,
                    "⟨{i}|{j}⟩ = {overlap}"
                );
            }
        }
    }

    #[test]
    fn analytic_derivative_channels_agree_with_finite_differences() {
        let grid = Arc::new(SpatialGrid::symmetric(10.0, 1024).unwrap());
        let params = PhysicalParams::natural(0.0);
        let mode = HermiteMode::new(3);
        let drive = 0.9_f64;
        let field = mode.amplitude(&grid, drive, &params).unwrap();

        // Spatial: central differences on the sampled values.
        let dx = grid.dx();
        let vals = &field.values;
        let d1 = field.d1_samples();
        let d2 = field.d2_samples();
        let mut worst1 = 0.0_f64;
        let mut worst2 = 0.0_f64;
        for i in 2..grid.len() - 2 {
            let fd1 = (vals[i + 1] - vals[i - 1]) / (2.0 * dx);
            let fd2 = (vals[i + 1] - 2.0 * vals[i] + vals[i - 1]) / (dx * dx);
            worst1 = worst1.max((d1[i] - fd1).abs());
            worst2 = worst2.max((d2[i] - fd2).abs());
        }
        assert!(worst1 < 1e-3, "d1 mismatch {worst1}");
        assert!(worst2 < 2e-2, "d2 mismatch {worst2}");

        // Drive: symmetric difference across ℛ.
        let h = 1e-5;
        let plus = mode.amplitude(&grid, drive + h, &params).unwrap();
        let minus = mode.amplitude(&grid, drive - h, &params).unwrap();
        let dparam = field.dparam.as_ref().unwrap();
        let mut worst = 0.0_f64;
        for i in 0..grid.len() {
            let fd = (plus.values[i] - minus.values[i]) / (2.0 * h);
            worst = worst.max((dparam[i] - fd).abs());
        }
        assert!(worst < 1e-8, "dparam mismatch {worst}");
    }

    #[test]
    fn theta_source_is_the_drive_derivative_of_cumulative_density() {
        let grid = Arc::new(SpatialGrid::symmetric(10.0, 1024).unwrap());
        let params = PhysicalParams::natural(0.0);
        let mode = HermiteMode::new(2);
        let drive = 1.3_f64;
        let h = 1e-5;

        let cumulative = |r: f64| -> Vec<f64> {
            let f = mode.amplitude(&grid, r, &params).unwrap();
            let dens: Vec<f64> = f.values.iter().map(|&v| v * v).collect();
            crate::numerics::cumulative_integral_uniform(&dens, grid.dx(), 8)
        };
        let plus = cumulative(drive + h);
        let minus = cumulative(drive - h);
        let source = mode.theta_source(&grid, drive, &params);
        let mut worst = 0.0_f64;
        for i in 0..grid.len() {
            let fd = (plus[i] - minus[i]) / (2.0 * h);
            worst = worst.max((source[i] - fd).abs());
        }
        assert!(worst < 1e-8, "flux source mismatch {worst}");
    }

    #[test]
    fn energy_ladder_is_equally_spaced() {
        let params = PhysicalParams::natural(0.0);
        for n in 0..5 {
            let e = HermiteMode::new(n).energy(2.5, &params);
            assert_relative_eq!(e, (n as f64 + 0.5) * 2.5, max_relative = 1e-15);
        }
    }
}
