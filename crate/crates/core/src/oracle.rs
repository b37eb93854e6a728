//! Slow, independent reference implementations used to validate the fast
//! kernels.

use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::spectral::{SpectralField, TorusGrid};

/// `O(n²)` DFT of one real component, normalized like [`SpectralField`].
pub fn direct_dft(grid: &TorusGrid, samples: &[f64]) -> Vec<Complex64> {
    let n = grid.len();
    let m = grid.points() as f64;
    let dim = grid.dim();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, slot) in out.iter_mut().enumerate() {
        let mode = grid.mode_index(k);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, s) in samples.iter().enumerate() {
            let pos = grid.unravel(x);
            let phase: f64 = (0..dim).map(|a| mode[a] as f64 * pos[a] as f64).sum::<f64>() / m;
            acc += Complex64::from_polar(*s, -2.0 * std::f64::consts::PI * phase);
        }
        *slot = acc / n as f64;
    }
    out
}

/// Inverse of [`direct_dft`], real part.
pub fn direct_idft(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<f64> {
    let n = grid.len();
    let m = grid.points() as f64;
    let dim = grid.dim();
    (0..n)
        .map(|x| {
            let pos = grid.unravel(x);
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let mode = grid.mode_index(k);
                    let phase: f64 = (0..dim).map(|a| mode[a] as f64 * pos[a] as f64).sum::<f64>() / m;
                    (c * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase)).re
                })
                .sum()
        })
        .collect()
}

/// Mode-by-mode application of a scalar symbol with the zero frequency
/// annihilated, written without any shared helpers.
pub fn direct_multiplier<S: Fn(&[f64; 3]) -> Complex64>(f: &SpectralField, symbol: S) -> SpectralField {
    let grid = *f.grid();
    let mut out = f.clone();
    let step = 2.0 * std::f64::consts::PI / grid.length();
    let half = grid.points() as i64 / 2;
    for c in 0..f.components() {
        for k in 0..grid.len() {
            let mode = grid.mode_index(k);
            let mut xi = [0.0; 3];
            for a in 0..grid.dim() {
                if mode[a] != -half {
                    xi[a] = step * mode[a] as f64;
                }
            }
            let zero = xi.iter().all(|x| *x == 0.0);
            out.component_mut(c)[k] = if zero { Complex64::new(0.0, 0.0) } else { f.component(c)[k] * symbol(&xi) };
        }
    }
    out
}

/// Product of two real fields through zero-padded transforms on a grid
/// `3/2` times finer, truncated back to the two-thirds band.
pub fn padded_product(a: &SpectralField, b: &SpectralField) -> SpectralField {
    let grid = *a.grid();
    let big = TorusGrid::new(grid.dim(), grid.points() * 2, grid.length()).expect("finer grid is valid");
    let lift = |f: &SpectralField| {
        let mut g = SpectralField::zeros(big, 1);
        for k in 0..grid.len() {
            let mode = grid.mode_index(k);
            if mode[..grid.dim()].iter().any(|j| j.abs() >= grid.points() as i64 / 2) {
                continue;
            }
            g.set_coefficient(0, mode, f.component(0)[k]);
        }
        g
    };
    let pa = lift(a).to_physical();
    let pb = lift(b).to_physical();
    let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    let big_prod = SpectralField::from_physical(big, 1, &prod).expect("shape");
    let limit = grid.points() as i64 / 3;
    let mut out = SpectralField::zeros(grid, 1);
    for k in 0..grid.len() {
        let mode = grid.mode_index(k);
        if mode[..grid.dim()].iter().all(|j| j.abs() <= limit) {
            out.component_mut(0)[k] = big_prod.coefficient(0, mode);
        }
    }
    out
}

/// Adaptive high-order Taylor integrator for `u' = A u` with a constant
/// complex matrix `A` (row-major `n×n`), carried out in double-double
/// arithmetic so that rounding does not accumulate over many oscillations.
/// Each step has `h‖A‖ ≤ 1`; the series is summed until its terms fall below
/// `tol` relative to the state.
pub fn taylor_linear_ode(a: &[Complex64], n: usize, u0: &[Complex64], t: f64, tol: f64) -> Vec<Complex64> {
    #[derive(Clone, Copy)]
    struct Dd {
        re: TwoFloat,
        im: TwoFloat,
    }
    let zero = Dd { re: TwoFloat::from(0.0), im: TwoFloat::from(0.0) };
    let mul = |x: Complex64, y: Dd| Dd {
        re: y.re * x.re - y.im * x.im,
        im: y.re * x.im + y.im * x.re,
    };
    let mag = |x: &Dd| f64::from(x.re).hypot(f64::from(x.im));

    let norm_a = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut u: Vec<Dd> = u0.iter().map(|c| Dd { re: TwoFloat::from(c.re), im: TwoFloat::from(c.im) }).collect();
    let total = TwoFloat::from(t);
    let mut time = TwoFloat::from(0.0);
    let h_max = if norm_a > 0.0 { TwoFloat::from(1.0) / norm_a } else { total };
    let mut term = vec![zero; n];
    let mut next = vec![zero; n];
    while time < total {
        let rest = total - time;
        let h = if h_max < rest { h_max } else { rest };
        let scale = u.iter().map(mag).fold(0.0, f64::max).max(1e-300);
        term.copy_from_slice(&u);
        let mut acc = u.clone();
        for k in 1..100 {
            let factor = h / k as f64;
            for (i, slot) in next.iter_mut().enumerate() {
                let mut s = zero;
                for j in 0..n {
                    let p = mul(a[i * n + j], term[j]);
                    s.re += p.re;
                    s.im += p.im;
                }
                *slot = Dd { re: s.re * factor, im: s.im * factor };
            }
            std::mem::swap(&mut term, &mut next);
            for (x, y) in acc.iter_mut().zip(&term) {
                x.re += y.re;
                x.im += y.im;
            }
            if term.iter().map(mag).fold(0.0, f64::max) < tol * scale * 1e-6 {
                break;
            }
        }
        u = acc;
        time += h;
    }
    u.iter().map(|x| Complex64::new(f64::from(x.re), f64::from(x.im))).collect()
}

/// Classical fixed-step RK4 for `u' = f(t, u)` on a flat complex vector.
pub fn rk4<F>(u0: &[Complex64], t0: f64, t1: f64, steps: usize, mut f: F) -> Vec<Complex64>
where
    F: FnMut(f64, &[Complex64]) -> Vec<Complex64>,
{
    let h = (t1 - t0) / steps as f64;
    let mut u = u0.to_vec();
    let mut t = t0;
    let add = |u: &[Complex64], k: &[Complex64], s: f64| -> Vec<Complex64> {
        u.iter().zip(k).map(|(a, b)| a + b * s).collect()
    };
    for _ in 0..steps {
        let k1 = f(t, &u);
        let k2 = f(t + h / 2.0, &add(&u, &k1, h / 2.0));
        let k3 = f(t + h / 2.0, &add(&u, &k2, h / 2.0));
        let k4 = f(t + h, &add(&u, &k3, h));
        for i in 0..u.len() {
            u[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
        t += h;
    }
    u
}
