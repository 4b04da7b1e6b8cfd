//! FFT-based machinery on a periodic grid: spectral derivatives, kinetic
//! phase factors for split-step propagation, and k-space expectations.

use crate::domain::SpatialGrid;
use crate::scalar::{real, Real};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Planned FFTs plus the angular-wavenumber grid for one spatial grid size.
/// Build once per grid and reuse; plans are cheap to clone (Arc).
#[derive(Clone)]
pub struct SpectralWorkspace<T: Real> {
    n: usize,
    fft: Arc<dyn Fft<T>>,
    ifft: Arc<dyn Fft<T>>,
    /// Angular wavenumbers in FFT bin order (0, +, ..., Nyquist, ..., -).
    k: Vec<T>,
}

impl<T: Real> SpectralWorkspace<T> {
    pub fn new(grid: &SpatialGrid<T>) -> Self {
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let two_pi = real::<T>(2.0) * T::PI();
        let dk = two_pi / grid.period();
        let k = (0..n)
            .map(|j| {
                let m = if j <= n / 2 {
                    j as isize
                } else {
                    j as isize - n as isize
                };
                T::from_isize(m).unwrap() * dk
            })
            .collect();
        SpectralWorkspace { n, fft, ifft, k }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn wavenumbers(&self) -> &[T] {
        &self.k
    }

    pub fn forward(&self, data: &mut [Complex<T>]) {
        debug_assert_eq!(data.len(), self.n);
        self.fft.process(data);
    }

    /// Inverse transform including the 1/n normalization.
    pub fn inverse(&self, data: &mut [Complex<T>]) {
        debug_assert_eq!(data.len(), self.n);
        self.ifft.process(data);
        let inv = T::one() / T::from_usize(self.n).unwrap();
        for c in data.iter_mut() {
            *c = c.scale(inv);
        }
    }

    /// Spectral `order`-th derivative of periodic complex samples. For odd
    /// orders the Nyquist bin is zeroed so derivatives of real data stay real.
    pub fn derivative_complex(&self, values: &[Complex<T>], order: usize) -> Vec<Complex<T>> {
        let mut hat = values.to_vec();
        self.forward(&mut hat);
        let i_unit = Complex::new(T::zero(), T::one());
        for (j, c) in hat.iter_mut().enumerate() {
            let ik = i_unit.scale(self.k[j]);
            *c *= ik.powu(order as u32);
        }
        if order % 2 == 1 && self.n % 2 == 0 {
            hat[self.n / 2] = Complex::new(T::zero(), T::zero());
        }
        self.inverse(&mut hat);
        hat
    }

    /// Spectral `order`-th derivative of periodic real samples.
    pub fn derivative_real(&self, values: &[T], order: usize) -> Vec<T> {
        let complex: Vec<Complex<T>> = values
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .collect();
        self.derivative_complex(&complex, order)
            .into_iter()
            .map(|c| c.re)
            .collect()
    }

    /// Multiplies the spectrum by `exp(i * coeff * k^2)` in place. With
    /// `coeff = -hbar*dt/(2m)` this is the exact free-particle step.
    pub fn apply_k_phase(&self, psi: &mut [Complex<T>], coeff: T) {
        self.forward(psi);
        for (j, c) in psi.iter_mut().enumerate() {
            let phase = coeff * self.k[j] * self.k[j];
            *c *= Complex::from_polar(T::one(), phase);
        }
        self.inverse(psi);
    }

    /// Multiplies the spectrum by `exp(-coeff * k^2)` in place
    /// (imaginary-time kinetic half-step with `coeff = hbar*dt/(2m)`).
    pub fn apply_k_decay(&self, psi: &mut [Complex<T>], coeff: T) {
        self.forward(psi);
        for (j, c) in psi.iter_mut().enumerate() {
            let damp = (-coeff * self.k[j] * self.k[j]).exp();
            *c = c.scale(damp);
        }
        self.inverse(psi);
    }

    /// `<psi| -hbar^2/(2m) d^2/dx^2 |psi>` via Parseval on the periodic grid.
    pub fn kinetic_expectation(&self, psi: &[Complex<T>], dx: T, hbar: T, mass: T) -> T {
        let mut hat = psi.to_vec();
        self.forward(&mut hat);
        let norm = dx / T::from_usize(self.n).unwrap();
        let half = real::<T>(0.5);
        let pref = half * hbar * hbar / mass;
        hat.iter()
            .enumerate()
            .map(|(j, c)| pref * self.k[j] * self.k[j] * c.norm_sqr())
            .sum::<T>()
            * norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SpatialGrid;
    use approx::assert_relative_eq;

    fn grid(n: usize, half: f64) -> SpatialGrid<f64> {
        SpatialGrid::symmetric(half, n).unwrap()
    }

    #[test]
    fn wavenumber_layout_is_fft_ordered() {
        let g = grid(16, 8.0);
        let ws = SpectralWorkspace::new(&g);
        let dk = 2.0 * std::f64::consts::PI / 16.0;
        assert_relative_eq!(ws.wavenumbers()[0], 0.0);
        assert_relative_eq!(ws.wavenumbers()[1], dk);
        assert_relative_eq!(ws.wavenumbers()[8], 8.0 * dk);
        assert_relative_eq!(ws.wavenumbers()[15], -dk);
    }

    #[test]
    fn spectral_derivative_of_gaussian_is_machine_accurate() {
        let g = grid(256, 10.0);
        let ws = SpectralWorkspace::new(&g);
        let f: Vec<f64> = g.points().iter().map(|&x| (-0.5 * x * x).exp()).collect();
        let d1 = ws.derivative_real(&f, 1);
        let d2 = ws.derivative_real(&f, 2);
        for (i, &x) in g.points().iter().enumerate() {
            let v = (-0.5 * x * x).exp();
            assert!((d1[i] + x * v).abs() < 1e-12, "d1 at {x}");
            assert!((d2[i] - (x * x - 1.0) * v).abs() < 1e-11, "d2 at {x}");
        }
    }

    #[test]
    fn derivative_of_real_data_stays_real_with_nyquist_content() {
        let g = grid(32, 4.0);
        let ws = SpectralWorkspace::new(&g);
        // alternate signs: pure Nyquist mode
        let f: Vec<Complex<f64>> = (0..32)
            .map(|i| Complex::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let d = ws.derivative_complex(&f, 1);
        for c in d {
            assert!(c.im.abs() < 1e-12 && c.re.abs() < 1e-12);
        }
    }

    #[test]
    fn free_step_matches_analytic_gaussian_spreading() {
        // psi(x,0) = (pi w0^2)^{-1/4} exp(-x^2/(2 w0^2)); after free evolution
        // for time t the density has width w(t) = w0 sqrt(1 + (t/w0^2)^2)
        // (hbar = m = 1).
        let g = grid(1024, 40.0);
        let ws = SpectralWorkspace::new(&g);
        let w0 = 1.3f64;
        let t = 2.7f64;
        let mut psi: Vec<Complex<f64>> = g
            .points()
            .iter()
            .map(|&x| {
                Complex::new(
                    (-0.5 * x * x / (w0 * w0)).exp()
                        / (std::f64::consts::PI * w0 * w0).powf(0.25),
                    0.0,
                )
            })
            .collect();
        ws.apply_k_phase(&mut psi, -0.5 * t);
        let wt = w0 * (1.0 + (t / (w0 * w0)).powi(2)).sqrt();
        for (i, &x) in g.points().iter().enumerate() {
            let want = (-(x * x) / (wt * wt)).exp() / (std::f64::consts::PI * wt * wt).sqrt();
            assert!(
                (psi[i].norm_sqr() - want).abs() < 1e-12,
                "density at {x}: {} vs {want}",
                psi[i].norm_sqr()
            );
        }
    }

    #[test]
    fn kinetic_expectation_of_oscillator_ground_state() {
        let g = grid(512, 12.0);
        let ws = SpectralWorkspace::new(&g);
        let psi: Vec<Complex<f64>> = g
            .points()
            .iter()
            .map(|&x| Complex::new((-0.5 * x * x).exp() / std::f64::consts::PI.powf(0.25), 0.0))
            .collect();
        let t = ws.kinetic_expectation(&psi, g.dx(), 1.0, 1.0);
        assert_relative_eq!(t, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn forward_inverse_round_trip() {
        let g = grid(64, 5.0);
        let ws = SpectralWorkspace::new(&g);
        let orig: Vec<Complex<f64>> = (0..64)
            .map(|i| Complex::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        ws.forward(&mut data);
        ws.inverse(&mut data);
        for (a, b) in orig.iter().zip(&data) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
