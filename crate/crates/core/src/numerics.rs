//! Low-level grid numerics: finite-difference weights on arbitrary stencils,
//! high-order cumulative quadrature, local polynomial interpolation, and a
//! fixed-step RK4 driver. Everything here is deliberately boring and heavily
//! pinned by exactness tests, because the physics layers above push these
//! kernels to the 1e-8..1e-12 regime.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Finite-difference weights for derivatives 0..=max_order at the point `z`
/// given sample locations `nodes` (Fornberg's recurrence). Returns one row of
/// weights per derivative order: `weights[k][j]` multiplies `f(nodes[j])` in
/// the k-th derivative.
pub fn fd_weights<T: Real>(z: T, nodes: &[T], max_order: usize) -> Vec<Vec<T>> {
    let n = nodes.len();
    assert!(
        n > max_order,
        "need more than {max_order} nodes for an order-{max_order} derivative"
    );
    let m = max_order;
    let mut c = vec![vec![T::zero(); m + 1]; n];
    let mut c1 = T::one();
    let mut c4 = nodes[0] - z;
    c[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    let kf = T::from_usize(k).unwrap();
                    c[i][k] = c1 * (kf * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                let kf = T::from_usize(k).unwrap();
                c[j][k] = (c4 * c[j][k] - kf * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    (0..=m)
        .map(|k| (0..n).map(|j| c[j][k]).collect())
        .collect()
}

/// `order`-th derivative of uniformly sampled values with an `stencil`-point
/// moving window (centered in the interior, one-sided at the edges). Exact on
/// polynomials of degree below `stencil`.
pub fn derivative_uniform<T: Real>(values: &[T], dx: T, order: usize, stencil: usize) -> Vec<T> {
    let n = values.len();
    assert!(stencil > order, "stencil {stencil} too small for order {order}");
    assert!(n >= stencil, "{n} samples cannot fill a {stencil}-point stencil");
    let half = stencil / 2;
    let scale = (T::one() / dx).powi(order as i32);
    let mut cache: Vec<Option<Vec<T>>> = vec![None; stencil];
    let mut out = vec![T::zero(); n];
    for (i, slot) in out.iter_mut().enumerate() {
        let start = i.saturating_sub(half).min(n - stencil);
        let offset = i - start;
        let w = cache[offset].get_or_insert_with(|| {
            let nodes: Vec<T> = (0..stencil)
                .map(|l| T::from_usize(l).unwrap() - T::from_usize(offset).unwrap())
                .collect();
            fd_weights(T::zero(), &nodes, order).pop().unwrap()
        });
        let mut acc = T::zero();
        for (l, wl) in w.iter().enumerate() {
            acc = acc + *wl * values[start + l];
        }
        *slot = acc * scale;
    }
    out
}

/// Reduced fraction over i128; only used to precompute quadrature weights
/// exactly, so the arithmetic stays tiny.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Rat {
    num: i128,
    den: i128,
}

impl Rat {
    fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd_i128(num.abs(), den.abs()).max(1);
        let sign = if den < 0 { -1 } else { 1 };
        Rat {
            num: sign * num / g,
            den: sign * den / g,
        }
    }
    fn zero() -> Self {
        Rat { num: 0, den: 1 }
    }
    fn sub(self, o: Rat) -> Self {
        Rat::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }
    fn mul(self, o: Rat) -> Self {
        Rat::new(self.num * o.num, self.den * o.den)
    }
    fn div(self, o: Rat) -> Self {
        Rat::new(self.num * o.den, self.den * o.num)
    }
    fn to_scalar<T: Real>(self) -> T {
        real::<T>(self.num as f64 / self.den as f64)
    }
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd_i128(b, a % b)
    }
}

/// Weights integrating the local interpolant over the unit panel
/// `[offset, offset+1]` of a `stencil`-point window with integer node
/// spacing. Solved exactly in rational arithmetic (moment conditions
/// through degree `stencil - 1`).
fn exact_panel_weights<T: Real>(stencil: usize, offset: usize) -> Vec<T> {
    assert!(stencil >= 2 && stencil <= 12, "panel stencil out of range");
    assert!(offset + 1 < stencil || stencil == 2, "panel must sit inside the window");
    let m = stencil;
    let mut a = vec![vec![Rat::zero(); m]; m];
    let mut b = vec![Rat::zero(); m];
    let o = offset as i128;
    for p in 0..m {
        for (l, entry) in a[p].iter_mut().enumerate() {
            *entry = Rat::new((l as i128).pow(p as u32), 1);
        }
        b[p] = Rat::new(
            (o + 1).pow(p as u32 + 1) - o.pow(p as u32 + 1),
            p as i128 + 1,
        );
    }
    for col in 0..m {
        let piv = (col..m)
            .find(|&r| a[r][col].num != 0)
            .expect("Vandermonde moment system is nonsingular");
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..m {
            if r != col && a[r][col].num != 0 {
                let f = a[r][col].div(a[col][col]);
                for c in col..m {
                    a[r][c] = a[r][c].sub(f.mul(a[col][c]));
                }
                b[r] = b[r].sub(f.mul(b[col]));
            }
        }
    }
    (0..m).map(|i| b[i].div(a[i][i]).to_scalar()).collect()
}

/// Running integral `F(x_i) = int_{x_0}^{x_i} f dx` of uniformly sampled
/// values, panel by panel, each panel integrated with a `stencil`-point local
/// interpolant. Exact on polynomials of degree below `stencil`; `out[0] = 0`.
pub fn cumulative_integral_uniform<T: Real>(values: &[T], dx: T, stencil: usize) -> Vec<T> {
    let n = values.len();
    assert!(stencil >= 2, "panel stencil must span at least two points");
    assert!(n >= stencil, "{n} samples cannot fill a {stencil}-point stencil");
    let mut cache: Vec<Option<Vec<T>>> = vec![None; stencil];
    let mut out = vec![T::zero(); n];
    let mut acc = T::zero();
    for j in 0..n - 1 {
        let start = j.saturating_sub(stencil / 2 - 1).min(n - stencil);
        let offset = j - start;
        let w = cache[offset].get_or_insert_with(|| exact_panel_weights::<T>(stencil, offset));
        let mut panel = T::zero();
        for (l, wl) in w.iter().enumerate() {
            panel = panel + *wl * values[start + l];
        }
        acc = acc + panel * dx;
        out[j + 1] = acc;
    }
    out
}

/// Value of the local `stencil`-point Lagrange interpolant at displacement
/// `x_from_first` measured from the first sample.
pub fn interpolate_uniform<T: Real>(values: &[T], dx: T, x_from_first: T, stencil: usize) -> T {
    let n = values.len();
    assert!(n >= stencil, "{n} samples cannot fill a {stencil}-point stencil");
    let u = x_from_first / dx;
    let i0 = u.floor().to_isize().unwrap_or(0);
    let start = (i0 - (stencil as isize / 2 - 1)).clamp(0, (n - stencil) as isize) as usize;
    let nodes: Vec<T> = (0..stencil).map(|l| T::from_usize(l).unwrap()).collect();
    let z = u - T::from_usize(start).unwrap();
    let w = fd_weights(z, &nodes, 0).pop().unwrap();
    w.iter()
        .enumerate()
        .map(|(l, wl)| *wl * values[start + l])
        .sum()
}

/// Trapezoid rule on a uniform grid (open-domain data).
pub fn trapezoid<T: Real>(values: &[T], dx: T) -> T {
    let n = values.len();
    if n < 2 {
        return T::zero();
    }
    let half = real::<T>(0.5);
    let sum: T = values.iter().copied().sum();
    (sum - half * (values[0] + values[n - 1])) * dx
}

/// Rectangle rule `dx * sum f_i`; on a periodic grid this is the trapezoid
/// rule with the wrap point counted once, and is spectrally accurate for
/// smooth periodic (or decayed-to-zero) integrands.
pub fn uniform_sum<T: Real>(values: &[T], dx: T) -> T {
    values.iter().copied().sum::<T>() * dx
}

/// Classic fixed-step RK4 for a first-order system of size N. Returns the
/// trajectory at every knot including the initial condition
/// (`n_steps + 1` entries).
pub fn rk4_path<T: Real, const N: usize>(
    mut f: impl FnMut(T, &[T; N]) -> [T; N],
    y0: [T; N],
    t0: T,
    dt: T,
    n_steps: usize,
) -> Vec<[T; N]> {
    fn add_scaled<T: Real, const N: usize>(y: &[T; N], k: &[T; N], s: T) -> [T; N] {
        let mut o = *y;
        for i in 0..N {
            o[i] = y[i] + k[i] * s;
        }
        o
    }
    let half = real::<T>(0.5);
    let sixth = T::one() / real::<T>(6.0);
    let two = real::<T>(2.0);
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(y0);
    let mut y = y0;
    for step in 0..n_steps {
        let t = t0 + T::from_usize(step).unwrap() * dt;
        let k1 = f(t, &y);
        let k2 = f(t + dt * half, &add_scaled(&y, &k1, dt * half));
        let k3 = f(t + dt * half, &add_scaled(&y, &k2, dt * half));
        let k4 = f(t + dt, &add_scaled(&y, &k3, dt));
        for i in 0..N {
            y[i] = y[i] + dt * sixth * (k1[i] + two * (k2[i] + k3[i]) + k4[i]);
        }
        out.push(y);
    }
    out
}

/// Dense linear solve with partial pivoting; consumed by small utility
/// systems and test oracles. Errors on a (numerically) singular matrix.
pub fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r1, &r2| {
                a[r1][col]
                    .abs()
                    .partial_cmp(&a[r2][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[piv][col].abs() < real::<T>(1e-300) {
            return Err(Error::InvalidArgument(
                "singular linear system in solve_dense".into(),
            ));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != T::zero() {
                    for c in col..n {
                        let delta = f * a[col][c];
                        a[r][c] = a[r][c] - delta;
                    }
                    let delta = f * b[col];
                    b[r] = b[r] - delta;
                }
            }
        }
    }
    Ok((0..n).map(|i| b[i] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fd_weights_reproduce_classic_stencils() {
        let nodes: Vec<f64> = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
        let w = fd_weights(0.0, &nodes, 2);
        let first = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let second = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for j in 0..5 {
            assert_relative_eq!(w[1][j], first[j], epsilon = 1e-14);
            assert_relative_eq!(w[2][j], second[j], epsilon = 1e-14);
        }
        let w1 = fd_weights(0.0, &[0.0, 1.0, 2.0], 1);
        let one_sided = [-1.5, 2.0, -0.5];
        for j in 0..3 {
            assert_relative_eq!(w1[1][j], one_sided[j], epsilon = 1e-14);
        }
    }

    fn poly_and_derivs(coeffs: &[f64], x: f64) -> (f64, f64, f64) {
        let mut v = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (i, &c) in coeffs.iter().enumerate() {
            v += c * x.powi(i as i32);
            if i >= 1 {
                d1 += c * i as f64 * x.powi(i as i32 - 1);
            }
            if i >= 2 {
                d2 += c * (i * (i - 1)) as f64 * x.powi(i as i32 - 2);
            }
        }
        (v, d1, d2)
    }

    #[test]
    fn derivative_exact_on_polynomials_below_stencil_degree() {
        let coeffs = [0.3, -1.1, 0.7, 2.0, -0.25, 0.05, -0.4, 0.09];
        let n = 64;
        let dx = 0.13;
        let values: Vec<f64> = (0..n)
            .map(|i| poly_and_derivs(&coeffs, i as f64 * dx).0)
            .collect();
        let d1 = derivative_uniform(&values, dx, 1, 8);
        let d2 = derivative_uniform(&values, dx, 2, 9);
        for i in 0..n {
            let x = i as f64 * dx;
            let (_, want1, want2) = poly_and_derivs(&coeffs, x);
            assert_relative_eq!(d1[i], want1, max_relative = 1e-10, epsilon = 1e-10);
            assert_relative_eq!(d2[i], want2, max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn derivative_converges_at_stencil_order() {
        let err = |n: usize| {
            let dx = 2.0 * std::f64::consts::PI / n as f64;
            let values: Vec<f64> = (0..n).map(|i| (i as f64 * dx).sin()).collect();
            let d = derivative_uniform(&values, dx, 1, 5);
            // interior only, away from the one-sided edges
            (n / 4..3 * n / 4)
                .map(|i| (d[i] - (i as f64 * dx).cos()).abs())
                .fold(0.0f64, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!(
            (10.0..25.0).contains(&ratio),
            "five-point first derivative should converge ~ dx^4, ratio {ratio}"
        );
    }

    #[test]
    fn panel_weights_match_known_low_order_rules() {
        let w2 = exact_panel_weights::<f64>(2, 0);
        assert_eq!(w2, vec![0.5, 0.5]);
        // Simpson-like 3-point panel over [0,1]: 5/12, 2/3, -1/12
        let w3 = exact_panel_weights::<f64>(3, 0);
        assert_relative_eq!(w3[0], 5.0 / 12.0, epsilon = 1e-15);
        assert_relative_eq!(w3[1], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(w3[2], -1.0 / 12.0, epsilon = 1e-15);
        // Centered panel of an 8-point window is symmetric.
        let w8 = exact_panel_weights::<f64>(8, 3);
        for l in 0..8 {
            assert_relative_eq!(w8[l], w8[7 - l], epsilon = 1e-15);
        }
    }

    #[test]
    fn cumulative_integral_exact_on_degree_seven() {
        let coeffs = [0.2, 1.0, -0.6, 0.31, -0.07, 0.45, -0.12, 0.033];
        let n = 48;
        let dx = 0.21;
        let values: Vec<f64> = (0..n)
            .map(|i| poly_and_derivs(&coeffs, i as f64 * dx).0)
            .collect();
        let cum = cumulative_integral_uniform(&values, dx, 8);
        let anti = |x: f64| {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c * x.powi(i as i32 + 1) / (i as f64 + 1.0))
                .sum::<f64>()
        };
        for i in 0..n {
            let want = anti(i as f64 * dx) - anti(0.0);
            assert_relative_eq!(cum[i], want, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn cumulative_integral_of_gaussian_matches_erf() {
        let n = 512;
        let x_min = -8.0f64;
        let dx = 16.0 / n as f64;
        let values: Vec<f64> = (0..n)
            .map(|i| {
                let x = x_min + i as f64 * dx;
                (-x * x).exp()
            })
            .collect();
        let cum = cumulative_integral_uniform(&values, dx, 8);
        let rt_pi = std::f64::consts::PI.sqrt();
        for i in (0..n).step_by(17) {
            let x = x_min + i as f64 * dx;
            let want = 0.5 * rt_pi * (Real::erf(x) - Real::erf(x_min));
            assert!(
                (cum[i] - want).abs() < 2e-12,
                "at x = {x}: got {}, want {want}",
                cum[i]
            );
        }
    }

    #[test]
    fn interpolation_exact_on_polynomials_and_accurate_on_sine() {
        let coeffs = [0.5, -0.3, 1.7, -0.9, 0.21, 0.11, -0.05];
        let n = 40;
        let dx = 0.17;
        let values: Vec<f64> = (0..n)
            .map(|i| poly_and_derivs(&coeffs, i as f64 * dx).0)
            .collect();
        for &frac in &[0.0, 0.31, 0.5, 0.77, 5.21, 37.9] {
            let x = frac * dx;
            let got = interpolate_uniform(&values, dx, x, 8);
            let want = poly_and_derivs(&coeffs, x).0;
            assert_relative_eq!(got, want, max_relative = 1e-11, epsilon = 1e-11);
        }
        let m = 128;
        let dxs = 2.0 * std::f64::consts::PI / m as f64;
        let sine: Vec<f64> = (0..m).map(|i| (i as f64 * dxs).sin()).collect();
        let got = interpolate_uniform(&sine, dxs, 2.0_f64, 8);
        assert!((got - 2.0f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn rk4_oscillator_energy_and_fourth_order_convergence() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let err_at = |n_steps: usize| {
            let dt = 10.0 / n_steps as f64;
            let path = rk4_path(f, [1.0, 0.0], 0.0, dt, n_steps);
            let last = path[n_steps];
            ((last[0] - 10.0f64.cos()).powi(2) + (last[1] + 10.0f64.sin()).powi(2)).sqrt()
        };
        let e1 = err_at(500);
        let e2 = err_at(1000);
        let ratio = e1 / e2;
        assert!(
            (12.0..20.0).contains(&ratio),
            "RK4 should converge ~ dt^4, got ratio {ratio}"
        );
        assert!(e2 < 1e-9);
    }

    #[test]
    fn solve_dense_recovers_known_solution() {
        let a = vec![
            vec![2.0, 1.0, -1.0],
            vec![-3.0, -1.0, 2.0],
            vec![-2.0, 1.0, 2.0],
        ];
        let b = vec![8.0, -11.0, -3.0];
        let x = solve_dense(a, b).unwrap();
        let want = [2.0, 3.0, -1.0];
        for i in 0..3 {
            assert_relative_eq!(x[i], want[i], epsilon = 1e-12);
        }
        let singular = solve_dense(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]);
        assert!(singular.is_err());
    }
}
