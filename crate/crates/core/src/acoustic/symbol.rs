use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::plasma::ModelParams;

/// 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Mat2([[one, zero], [zero, one]])
    }

    pub fn from_real(a: [[f64; 2]; 2]) -> Self {
        Mat2([
            [Complex64::new(a[0][0], 0.0), Complex64::new(a[0][1], 0.0)],
            [Complex64::new(a[1][0], 0.0), Complex64::new(a[1][1], 0.0)],
        ])
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &other.0;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }

    pub fn apply(&self, x: [Complex64; 2]) -> [Complex64; 2] {
        let a = &self.0;
        [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
    }

    pub fn scale(&self, s: Complex64) -> Mat2 {
        let mut out = self.0;
        out.iter_mut().flatten().for_each(|x| *x *= s);
        Mat2(out)
    }

    pub fn add(&self, other: &Mat2) -> Mat2 {
        let mut out = self.0;
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += other.0[i][j];
            }
        }
        Mat2(out)
    }

    pub fn sub(&self, other: &Mat2) -> Mat2 {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let f2 = self.norm().powi(2);
        let d = self.det().norm();
        let disc = (f2 * f2 - 4.0 * d * d).max(0.0).sqrt();
        ((f2 + disc) / 2.0).sqrt()
    }
}

/// Eigen-data of the acoustic symbol at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticSymbol {
    pub xi_norm: f64,
    pub epsilon: f64,
    /// `ψ̄|ξ|/ε`
    pub upper: f64,
    /// `ψ̄|ξ|/ε + h'(0)/(|ξ|ε)`
    pub lower: f64,
    /// `λ = √(ψ̄²|ξ|² + ψ̄h'(0) - ε²/4)`
    pub lambda_osc: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
}

pub fn acoustic_symbol(xi_norm: f64, params: &ModelParams) -> Result<AcousticSymbol> {
    if !(xi_norm > 0.0 && xi_norm.is_finite()) {
        return Err(Error::Domain(format!("acoustic symbol needs |xi| > 0, got {xi_norm}")));
    }
    let psi = params.psi_bar();
    let hp = params.h_prime_0();
    let eps = params.epsilon();
    let discriminant = psi * psi * xi_norm * xi_norm + psi * hp - eps * eps / 4.0;
    if discriminant <= 0.0 {
        return Err(Error::Overdamped { xi_norm, epsilon: eps, discriminant });
    }
    let lambda = discriminant.sqrt();
    Ok(AcousticSymbol {
        xi_norm,
        epsilon: eps,
        upper: psi * xi_norm / eps,
        lower: psi * xi_norm / eps + hp / (xi_norm * eps),
        lambda_osc: lambda,
        lambda_plus: Complex64::new(-0.5, lambda / eps),
        lambda_minus: Complex64::new(-0.5, -lambda / eps),
    })
}

impl AcousticSymbol {
    /// `A(ξ)`
    pub fn matrix(&self) -> Mat2 {
        Mat2::from_real([[0.0, -self.upper], [self.lower, -1.0]])
    }

    /// `det A(ξ) = (ψ̄²|ξ|² + ψ̄h'(0))/ε²`
    pub fn determinant(&self) -> f64 {
        self.upper * self.lower
    }

    /// Spectral projectors `(P₊, P₋)`.
    pub fn projectors(&self) -> (Mat2, Mat2) {
        let a = self.matrix();
        let diff = self.lambda_plus - self.lambda_minus;
        let plus = a.sub(&Mat2::identity().scale(self.lambda_minus)).scale(1.0 / diff);
        let minus = a.sub(&Mat2::identity().scale(self.lambda_plus)).scale(-1.0 / diff);
        (plus, minus)
    }

    /// `f(A) = f(λ₊)P₊ + f(λ₋)P₋`
    pub fn function<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Mat2 {
        let (p, m) = self.projectors();
        p.scale(f(self.lambda_plus)).add(&m.scale(f(self.lambda_minus)))
    }

    /// `e^{tA}` written entrywise.
    pub fn propagator(&self, t: f64) -> Mat2 {
        let (lp, lm) = (self.lambda_plus, self.lambda_minus);
        let ep = (lp * t).exp();
        let em = (lm * t).exp();
        let diff = lp - lm;
        let g = (-lm * ep + lp * em) / diff;
        let s = (ep - em) / diff;
        Mat2([
            [g, s * (-self.upper)],
            [s * self.lower, g - s],
        ])
    }
}

/// `φ₁(z) = (e^z - 1)/z`
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        series(z, 1)
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `φ₂(z) = (e^z - 1 - z)/z²`
pub fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        series(z, 2)
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

/// `Σ_k z^k/(k+offset)!`
fn series(z: Complex64, offset: u32) -> Complex64 {
    let mut fact: f64 = (1..=offset).map(f64::from).product();
    let mut pow = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..24u32 {
        sum += pow / fact;
        pow *= z;
        fact *= f64::from(k + offset + 1);
    }
    sum
}
