use num_complex::Complex64;

use super::fft::{transform_in_place, Direction};
use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// A real scalar or vector field on a periodic grid, stored as Fourier
/// coefficients.
///
/// Coefficients are Fourier-series coefficients,
/// `c_k = M^{-N} Σ_x f(x) e^{-iξ_k·x}`, so a constant `c` has coefficient `c`
/// at mode 0 and Parseval reads `∫|f|² dx = L^N Σ_k |c_k|²` exactly. Storage
/// is component-major; each component is a row-major block of `M^N` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    components: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid, components: usize) -> Self {
        assert!(components >= 1, "a field needs at least one component");
        Self {
            grid,
            components,
            coeffs: vec![Complex64::new(0.0, 0.0); components * grid.len()],
        }
    }

    pub fn from_coefficients(
        grid: TorusGrid,
        components: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        if components == 0 || coeffs.len() != components * grid.len() {
            return Err(Error::Config(format!(
                "expected {} coefficients for {} component(s), got {}",
                components * grid.len(),
                components,
                coeffs.len()
            )));
        }
        Ok(Self { grid, components, coeffs })
    }

    /// Forward transform of real samples (component-major, row-major).
    pub fn from_physical(grid: TorusGrid, components: usize, samples: &[f64]) -> Result<Self> {
        let n = grid.len();
        if components == 0 || samples.len() != components * n {
            return Err(Error::Config(format!(
                "sample count {} does not match grid of {} points x {} component(s)",
                samples.len(),
                n,
                components
            )));
        }
        let scale = 1.0 / n as f64;
        let mut coeffs: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        for block in coeffs.chunks_mut(n) {
            transform_in_place(&grid, block, Direction::Forward);
            block.iter_mut().for_each(|c| *c *= scale);
        }
        Ok(Self { grid, components, coeffs })
    }

    /// Samples a closure at the grid points.
    pub fn from_fn<F>(grid: TorusGrid, components: usize, f: F) -> Self
    where
        F: Fn(&[f64; 3], usize) -> f64,
    {
        let n = grid.len();
        let mut samples = vec![0.0; components * n];
        for c in 0..components {
            for k in 0..n {
                samples[c * n + k] = f(&grid.point(k), c);
            }
        }
        Self::from_physical(grid, components, &samples).expect("sample count matches by construction")
    }

    /// Inverse transform; returns the real part of the samples.
    pub fn to_physical(&self) -> Vec<f64> {
        let n = self.grid.len();
        let mut out = Vec::with_capacity(self.coeffs.len());
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for block in self.coeffs.chunks(n) {
            buf.copy_from_slice(block);
            transform_in_place(&self.grid, &mut buf, Direction::Inverse);
            out.extend(buf.iter().map(|c| c.re));
        }
        out
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.coeffs[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.coeffs[c * n..(c + 1) * n]
    }

    /// Copy of one component as a scalar field.
    pub fn extract(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid,
            components: 1,
            coeffs: self.component(c).to_vec(),
        }
    }

    /// Stacks fields (all on the same grid) into one multi-component field.
    pub fn stack(parts: &[&SpectralField]) -> Result<SpectralField> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Config("cannot stack zero fields".into()))?;
        let grid = first.grid;
        let mut coeffs = Vec::new();
        let mut components = 0;
        for p in parts {
            if p.grid != grid {
                return Err(Error::Config("stacked fields live on different grids".into()));
            }
            coeffs.extend_from_slice(&p.coeffs);
            components += p.components;
        }
        Ok(SpectralField { grid, components, coeffs })
    }

    pub fn coefficient(&self, c: usize, mode: [i64; 3]) -> Complex64 {
        self.component(c)[self.grid.flat_of_mode(mode)]
    }

    pub fn set_coefficient(&mut self, c: usize, mode: [i64; 3], value: Complex64) {
        let k = self.grid.flat_of_mode(mode);
        self.component_mut(c)[k] = value;
    }

    /// Spatial mean of component `c`.
    pub fn mean(&self, c: usize) -> f64 {
        self.component(c)[0].re
    }

    pub fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid || self.components != other.components {
            return Err(Error::Config(format!(
                "incompatible fields: {} vs {} component(s)",
                self.components, other.components
            )));
        }
        Ok(())
    }

    /// `L²` norm through Parseval.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Real `L²` inner product `∫ f·g dx`.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        self.grid.volume()
            * self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| (a.conj() * b).re)
                .sum::<f64>()
    }

    /// `L^p` norm of the pointwise Euclidean magnitude, from physical samples.
    /// `p = f64::INFINITY` gives the maximum over grid points.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_of_samples(&self.grid, self.components, &self.to_physical(), p)
    }

    /// Largest relative defect of the conjugate symmetry `c(-k) = conj c(k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.len();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for block in self.coeffs.chunks(n) {
            for k in 0..n {
                let p = self.grid.partner(k);
                worst = worst.max((block[k] - block[p].conj()).norm());
            }
        }
        worst / scale
    }

    /// Replaces the field by its conjugate-symmetric part.
    pub fn symmetrize(&mut self) {
        let n = self.grid.len();
        let grid = self.grid;
        for block in self.coeffs.chunks_mut(n) {
            for k in 0..n {
                let p = grid.partner(k);
                if p > k {
                    let avg = 0.5 * (block[k] + block[p].conj());
                    block[k] = avg;
                    block[p] = avg.conj();
                } else if p == k {
                    block[k] = Complex64::new(block[k].re, 0.0);
                }
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += *y * a;
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest coefficient modulus.
    pub fn max_coefficient(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// `L^p` norm of multi-component samples (component-major layout).
pub fn lp_norm_of_samples(grid: &TorusGrid, components: usize, samples: &[f64], p: f64) -> f64 {
    let n = grid.len();
    let magnitude = |k: usize| -> f64 {
        if components == 1 {
            samples[k].abs()
        } else {
            (0..components)
                .map(|c| samples[c * n + k] * samples[c * n + k])
                .sum::<f64>()
                .sqrt()
        }
    };
    if p.is_infinite() {
        (0..n).map(magnitude).fold(0.0, f64::max)
    } else if p == 2.0 {
        (grid.cell_volume() * (0..n).map(|k| magnitude(k).powi(2)).sum::<f64>()).sqrt()
    } else {
        (grid.cell_volume() * (0..n).map(|k| magnitude(k).powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_lands_in_mode_zero() {
        let g = TorusGrid::new(2, 8, 3.0).unwrap();
        let f = SpectralField::from_fn(g, 1, |_, _| 2.5);
        assert!((f.component(0)[0] - Complex64::new(2.5, 0.0)).norm() < 1e-15);
        for k in 1..g.len() {
            assert!(f.component(0)[k].norm() < 1e-15);
        }
    }

    #[test]
    fn cosine_splits_into_two_halves() {
        let l = 5.0;
        let g = TorusGrid::new(1, 8, l).unwrap();
        let f = SpectralField::from_fn(g, 1, |x, _| (2.0 * PI * x[0] / l).cos());
        for k in 0..8 {
            let expected = if k == 1 || k == 7 { 0.5 } else { 0.0 };
            assert!((f.component(0)[k] - Complex64::new(expected, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn shape_mismatch_is_a_configuration_error() {
        let g = TorusGrid::new(2, 8, 1.0).unwrap();
        let err = SpectralField::from_physical(g, 1, &[0.0; 10]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(SpectralField::from_coefficients(g, 2, vec![Complex64::new(0.0, 0.0); 64]).is_err());
    }

    #[test]
    fn stack_and_extract() {
        let g = TorusGrid::new(1, 8, 1.0).unwrap();
        let a = SpectralField::from_fn(g, 1, |x, _| x[0]);
        let b = SpectralField::from_fn(g, 1, |x, _| 1.0 + x[0] * x[0]);
        let s = SpectralField::stack(&[&a, &b]).unwrap();
        assert_eq!(s.components(), 2);
        assert_eq!(s.extract(1), b);
    }

    #[test]
    fn lp_norms_of_a_constant() {
        let g = TorusGrid::new(2, 8, 2.0).unwrap();
        let f = SpectralField::from_fn(g, 1, |_, _| -3.0);
        assert!((f.lp_norm(f64::INFINITY) - 3.0).abs() < 1e-14);
        assert!((f.lp_norm(2.0) - 3.0 * 2.0).abs() < 1e-13);
        assert!((f.lp_norm(4.0) - 3.0 * 4f64.powf(0.25)).abs() < 1e-13);
        assert!((f.l2_norm() - 6.0).abs() < 1e-13);
    }
}
