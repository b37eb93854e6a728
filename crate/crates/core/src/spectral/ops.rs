//! Fourier-multiplier operators on [`SpectralField`]s.

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::{norm3, TorusGrid};
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// How a multiplier treats modes whose frequency vector vanishes (the mean,
/// and on even grids the pure-Nyquist modes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroMode {
    /// Evaluate the symbol at `ξ = 0` like any other mode.
    Evaluate,
    /// Leave the coefficient untouched.
    PassThrough,
    /// Set the coefficient to zero.
    Annihilate,
    /// Fail unless the mean is below `1e-12·‖f‖`; then annihilate.
    RequireZero,
}

/// Relative size of a mean treated as zero by [`ZeroMode::RequireZero`].
pub const MEAN_TOLERANCE: f64 = 1e-12;

fn check_zero_mean(f: &SpectralField, what: &str) -> Result<()> {
    let norm = f.l2_norm();
    let scale = f.grid().volume().sqrt();
    for c in 0..f.components() {
        let mean = f.component(c)[0].norm() * scale;
        if mean > MEAN_TOLERANCE * norm && mean > 0.0 {
            return Err(Error::Precondition(format!(
                "{what} needs mean-zero input; component {c} has mean {:e}",
                f.component(c)[0].re
            )));
        }
    }
    Ok(())
}

/// Multiplies each coefficient of every component by `symbol(ξ)`.
pub fn apply_multiplier<S>(f: &SpectralField, symbol: S, zero_mode: ZeroMode) -> Result<SpectralField>
where
    S: Fn(&[f64; 3]) -> Complex64,
{
    if zero_mode == ZeroMode::RequireZero {
        check_zero_mean(f, "multiplier")?;
    }
    let grid = *f.grid();
    let n = grid.len();
    let freqs = grid.frequency_table();
    let mut out = f.clone();
    for c in 0..f.components() {
        let block = out.component_mut(c);
        for k in 0..n {
            let xi = &freqs[k];
            if norm3(xi) == 0.0 {
                match zero_mode {
                    ZeroMode::Evaluate => {}
                    ZeroMode::PassThrough => continue,
                    ZeroMode::Annihilate | ZeroMode::RequireZero => {
                        block[k] = ZERO;
                        continue;
                    }
                }
            }
            let s = symbol(xi);
            if !(s.re.is_finite() && s.im.is_finite()) {
                if block[k] == ZERO {
                    continue;
                }
                return Err(Error::Domain(format!(
                    "symbol is not finite at xi = {:?} and no zero-mode policy covers it",
                    &xi[..grid.dim()]
                )));
            }
            block[k] *= s;
        }
    }
    Ok(out)
}

/// Applies a matrix-valued symbol `out_i(ξ) = Σ_j a_ij(ξ) f_j(ξ)`;
/// `symbol` writes an `out_components × f.components()` row-major matrix.
pub fn apply_matrix_multiplier<S>(
    f: &SpectralField,
    out_components: usize,
    symbol: S,
    zero_mode: ZeroMode,
) -> Result<SpectralField>
where
    S: Fn(&[f64; 3], &mut [Complex64]),
{
    if zero_mode == ZeroMode::RequireZero {
        check_zero_mean(f, "matrix multiplier")?;
    }
    let grid = *f.grid();
    let n = grid.len();
    let nin = f.components();
    let mut out = SpectralField::zeros(grid, out_components);
    let mut mat = vec![ZERO; out_components * nin];
    let mut input = vec![ZERO; nin];
    for k in 0..n {
        let xi = grid.frequency(k);
        for (j, slot) in input.iter_mut().enumerate() {
            *slot = f.component(j)[k];
        }
        if norm3(&xi) == 0.0 {
            match zero_mode {
                ZeroMode::Evaluate => {}
                ZeroMode::PassThrough => {
                    for i in 0..out_components.min(nin) {
                        out.component_mut(i)[k] = input[i];
                    }
                    continue;
                }
                ZeroMode::Annihilate | ZeroMode::RequireZero => continue,
            }
        }
        mat.iter_mut().for_each(|m| *m = ZERO);
        symbol(&xi, &mut mat);
        for i in 0..out_components {
            let mut acc = ZERO;
            for j in 0..nin {
                let a = mat[i * nin + j];
                if input[j] != ZERO {
                    if !(a.re.is_finite() && a.im.is_finite()) {
                        return Err(Error::Domain(format!(
                            "matrix symbol is not finite at xi = {:?}",
                            &xi[..grid.dim()]
                        )));
                    }
                    acc += a * input[j];
                }
            }
            out.component_mut(i)[k] = acc;
        }
    }
    Ok(out)
}

fn require_components(f: &SpectralField, expected: usize, what: &str) -> Result<()> {
    if f.components() != expected {
        return Err(Error::Config(format!(
            "{what} expects {expected} component(s), got {}",
            f.components()
        )));
    }
    Ok(())
}

/// `∇f` of a scalar field.
pub fn gradient(f: &SpectralField) -> Result<SpectralField> {
    require_components(f, 1, "gradient")?;
    let grid = *f.grid();
    let dim = grid.dim();
    let mut out = SpectralField::zeros(grid, dim);
    for k in 0..grid.len() {
        let xi = grid.frequency(k);
        let c = f.component(0)[k];
        for a in 0..dim {
            out.component_mut(a)[k] = I * xi[a] * c;
        }
    }
    Ok(out)
}

/// `div v` of an `N`-component field.
pub fn divergence(v: &SpectralField) -> Result<SpectralField> {
    let grid = *v.grid();
    require_components(v, grid.dim(), "divergence")?;
    let mut out = SpectralField::zeros(grid, 1);
    for k in 0..grid.len() {
        let xi = grid.frequency(k);
        let mut acc = ZERO;
        for a in 0..grid.dim() {
            acc += I * xi[a] * v.component(a)[k];
        }
        out.component_mut(0)[k] = acc;
    }
    Ok(out)
}

/// Curl: one component in 2-D (`∂₁v₂ - ∂₂v₁`), three in 3-D, zero in 1-D.
pub fn curl(v: &SpectralField) -> Result<SpectralField> {
    let grid = *v.grid();
    require_components(v, grid.dim(), "curl")?;
    let comps = match grid.dim() {
        3 => 3,
        _ => 1,
    };
    let mut out = SpectralField::zeros(grid, comps);
    for k in 0..grid.len() {
        let xi = grid.frequency(k);
        match grid.dim() {
            1 => {}
            2 => {
                out.component_mut(0)[k] = I * (xi[0] * v.component(1)[k] - xi[1] * v.component(0)[k]);
            }
            _ => {
                let (a, b, c) = (v.component(0)[k], v.component(1)[k], v.component(2)[k]);
                out.component_mut(0)[k] = I * (xi[1] * c - xi[2] * b);
                out.component_mut(1)[k] = I * (xi[2] * a - xi[0] * c);
                out.component_mut(2)[k] = I * (xi[0] * b - xi[1] * a);
            }
        }
    }
    Ok(out)
}

/// `Δf`
pub fn laplacian(f: &SpectralField) -> SpectralField {
    apply_multiplier(f, |xi| Complex64::new(-dot(xi, xi), 0.0), ZeroMode::Evaluate)
        .expect("laplacian symbol is finite everywhere")
}

/// `Λ^s f`, symbol `|ξ|^s`. Negative powers need mean-zero input.
pub fn lambda_power(f: &SpectralField, s: f64) -> Result<SpectralField> {
    let policy = if s < 0.0 {
        ZeroMode::RequireZero
    } else if s == 0.0 {
        ZeroMode::Annihilate
    } else {
        ZeroMode::Evaluate
    };
    apply_multiplier(f, |xi| Complex64::new(norm3(xi).powf(s), 0.0), policy)
}

/// `Δ^{-1} f`, symbol `-|ξ|^{-2}`; mean-zero input required.
pub fn inverse_laplacian(f: &SpectralField) -> Result<SpectralField> {
    apply_multiplier(f, |xi| Complex64::new(-1.0 / dot(xi, xi), 0.0), ZeroMode::RequireZero)
}

/// `∇Δ^{-1} f` of a scalar field, symbol `-iξ/|ξ|²`, with the zero mode
/// annihilated (no mean check: callers decide what to do with the mean).
pub fn grad_inverse_laplacian(f: &SpectralField) -> Result<SpectralField> {
    require_components(f, 1, "grad inverse laplacian")?;
    let grid = *f.grid();
    let dim = grid.dim();
    let mut out = SpectralField::zeros(grid, dim);
    for k in 0..grid.len() {
        let xi = grid.frequency(k);
        let r2 = dot(&xi, &xi);
        if r2 == 0.0 {
            continue;
        }
        let c = f.component(0)[k];
        for a in 0..dim {
            out.component_mut(a)[k] = -I * (xi[a] / r2) * c;
        }
    }
    Ok(out)
}

/// Leray decomposition `v = Pv + Qv` with `Q̂(ξ) = ξξᵀ/|ξ|²`; the zero
/// frequency goes entirely to `Pv`.
pub fn leray_project(v: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let grid = *v.grid();
    let dim = grid.dim();
    require_components(v, dim, "leray projection")?;
    let mut q = SpectralField::zeros(grid, dim);
    for k in 0..grid.len() {
        let xi = grid.frequency(k);
        let r2 = dot(&xi, &xi);
        if r2 == 0.0 {
            continue;
        }
        let mut proj = ZERO;
        for a in 0..dim {
            proj += v.component(a)[k] * xi[a];
        }
        proj /= r2;
        for a in 0..dim {
            q.component_mut(a)[k] = proj * xi[a];
        }
    }
    let p = v.sub(&q);
    Ok((p, q))
}

/// Whether mode `k` survives the two-thirds rule.
pub fn dealias_keeps(grid: &TorusGrid, k: usize) -> bool {
    let limit = grid.points() as i64 / 3;
    grid.mode_index(k)[..grid.dim()].iter().all(|j| j.abs() <= limit)
}

/// Two-thirds rule: zeroes every mode with some `|j| > M/3`.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

pub fn dealias_in_place(f: &mut SpectralField) {
    let grid = *f.grid();
    let mask: Vec<bool> = (0..grid.len()).map(|k| dealias_keeps(&grid, k)).collect();
    for c in 0..f.components() {
        for (coef, keep) in f.component_mut(c).iter_mut().zip(&mask) {
            if !keep {
                *coef = ZERO;
            }
        }
    }
}

/// Pointwise product of two scalar fields evaluated on the grid, then dealiased.
pub fn product(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    require_components(a, 1, "product")?;
    require_components(b, 1, "product")?;
    let pa = a.to_physical();
    let pb = b.to_physical();
    let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    Ok(dealias(&SpectralField::from_physical(*a.grid(), 1, &prod)?))
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid2() -> TorusGrid {
        TorusGrid::new(2, 16, 2.0 * PI).unwrap()
    }

    #[test]
    fn identity_symbol_is_identity() {
        let g = grid2();
        let f = SpectralField::from_fn(g, 1, |x, _| (x[0]).sin() + 0.3 * (2.0 * x[1]).cos());
        let out = apply_multiplier(&f, |_| Complex64::new(1.0, 0.0), ZeroMode::Evaluate).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn derivative_of_cosine() {
        let l = 3.0;
        let g = TorusGrid::new(1, 16, l).unwrap();
        let w = 2.0 * PI / l;
        let f = SpectralField::from_fn(g, 1, |x, _| (w * x[0]).cos());
        let df = apply_multiplier(&f, |xi| I * xi[0], ZeroMode::Evaluate).unwrap();
        let phys = df.to_physical();
        for k in 0..g.len() {
            let x = g.point(k)[0];
            assert!((phys[k] + w * (w * x).sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_symbol_without_policy_is_a_domain_error() {
        let g = grid2();
        let f = SpectralField::from_fn(g, 1, |x, _| 1.0 + x[0].cos());
        let err = apply_multiplier(&f, |xi| Complex64::new(1.0 / dot(xi, xi), 0.0), ZeroMode::Evaluate)
            .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(apply_multiplier(&f, |xi| Complex64::new(1.0 / dot(xi, xi), 0.0), ZeroMode::Annihilate).is_ok());
        let passed = apply_multiplier(&f, |xi| Complex64::new(1.0 / dot(xi, xi), 0.0), ZeroMode::PassThrough)
            .unwrap();
        assert!((passed.mean(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_powers_reject_nonzero_mean() {
        let g = grid2();
        let f = SpectralField::from_fn(g, 1, |x, _| 0.5 + x[1].sin());
        assert!(matches!(lambda_power(&f, -1.0), Err(Error::Precondition(_))));
        assert!(matches!(inverse_laplacian(&f), Err(Error::Precondition(_))));
        assert!(lambda_power(&f, 1.0).is_ok());
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = grid2();
        let f = SpectralField::from_fn(g, 1, |_, _| 4.0);
        assert_eq!(gradient(&f).unwrap().max_coefficient(), 0.0);
    }

    #[test]
    fn inverse_laplacian_of_sine() {
        let l = 7.0;
        let g = TorusGrid::new(2, 16, l).unwrap();
        let w = 2.0 * PI / l;
        let f = SpectralField::from_fn(g, 1, |x, _| (w * x[0]).sin());
        let u = inverse_laplacian(&f).unwrap().to_physical();
        let factor = (l / (2.0 * PI)).powi(2);
        for k in 0..g.len() {
            let x = g.point(k)[0];
            assert!((u[k] + factor * (w * x).sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn lambda_inverse_pair() {
        let g = grid2();
        let f = SpectralField::from_fn(g, 1, |x, _| x[0].sin() * (2.0 * x[1]).cos() + 0.2 * (3.0 * x[1]).sin());
        let back = lambda_power(&lambda_power(&f, 1.0).unwrap(), -1.0).unwrap();
        assert!(back.sub(&f).l2_norm() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn leray_of_pure_gradient_and_solenoidal_fields() {
        let g = grid2();
        let psi = SpectralField::from_fn(g, 1, |x, _| x[0].sin() * x[1].cos() + 0.5 * (2.0 * x[0]).cos());
        let grad = gradient(&psi).unwrap();
        let (p, q) = leray_project(&grad).unwrap();
        assert!(p.l2_norm() <= 1e-13 * grad.l2_norm());
        assert!(q.sub(&grad).l2_norm() <= 1e-13 * grad.l2_norm());

        // (-∂₂ψ, ∂₁ψ) is divergence free
        let sol = SpectralField::stack(&[&grad.extract(1).scaled(-1.0), &grad.extract(0)]).unwrap();
        let (p, q) = leray_project(&sol).unwrap();
        assert!(q.l2_norm() <= 1e-13 * sol.l2_norm());
        assert!(p.sub(&sol).l2_norm() <= 1e-13 * sol.l2_norm());
    }

    #[test]
    fn dealias_rules() {
        let g = TorusGrid::new(1, 16, 1.0).unwrap();
        let mut f = SpectralField::zeros(g, 1);
        f.set_coefficient(0, [7, 0, 0], Complex64::new(1.0, 0.0));
        f.set_coefficient(0, [0, 0, 0], Complex64::new(2.0, 0.0));
        let d = dealias(&f);
        assert_eq!(d.coefficient(0, [7, 0, 0]), ZERO);
        assert_eq!(d.coefficient(0, [0, 0, 0]), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn curl_of_gradient_vanishes_in_3d() {
        let g = TorusGrid::new(3, 8, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(g, 1, |x, _| x[0].sin() * x[1].cos() * (2.0 * x[2]).sin());
        let c = curl(&gradient(&f).unwrap()).unwrap();
        assert!(c.l2_norm() < 1e-13);
    }
}
