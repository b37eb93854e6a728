//! Frequency-localized oscillatory integrals of the acoustic Green's function
//! in two space dimensions.
//!
//! The kernels are radial in `ξ`, so
//! `∫ e^{iξ·z} g(|ξ|) dξ = 2π ∫ g(r) J₀(r|z|) r dr`
//! and only a one-dimensional oscillatory quadrature is needed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::littlewood_paley::smooth_step;
use crate::plasma::ModelParams;

/// Support of the localizing bump.
pub const BUMP_SUPPORT: (f64, f64) = (1.0 / 6.0, 3.0);
/// Interval on which the bump equals one.
pub const BUMP_PLATEAU: (f64, f64) = (5.0 / 6.0, 12.0 / 5.0);

/// Smooth bump equal to 1 on `[5/6, 12/5]` and vanishing outside `[1/6, 3]`.
///
/// Named to avoid confusion with the sound-speed symbol `ψ(n)`.
pub fn psi_bump(x: f64) -> f64 {
    let (a, b) = BUMP_SUPPORT;
    let (c, d) = BUMP_PLATEAU;
    smooth_step((x - a) / (c - a)) * (1.0 - smooth_step((x - d) / (b - d)))
}

/// Which of the five kernels to integrate.
///
/// For the kernels written with `±` the upper sign is used: `λ₋e^{iτλ}`
/// for `j = 3` and `e^{iτλ}` for `j = 4, 5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    /// `1/(λ₊-λ₋)`, phase `e^{iτλ}`
    Plain,
    /// `1/(λ₊-λ₋)`, phase `e^{-iτλ}`
    Conjugate,
    /// `λ₋/(λ₊-λ₋)`
    Eigen,
    /// `ψ̄|ξ|/ε · 1/(λ₊-λ₋)`
    Upper,
    /// `h'(0)/(|ξ|ε) · 1/(λ₊-λ₋)`
    Lower,
}

impl Kernel {
    pub const ALL: [Kernel; 5] = [Kernel::Plain, Kernel::Conjugate, Kernel::Eigen, Kernel::Upper, Kernel::Lower];

    pub fn from_index(j: usize) -> Result<Self> {
        match j {
            1..=5 => Ok(Self::ALL[j - 1]),
            _ => Err(Error::Domain(format!("dispersive kernel index must be in 1..=5, got {j}"))),
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).unwrap() + 1
    }
}

/// Evaluation point of `I_{j,k}(t, τ, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveArgs {
    pub kernel: Kernel,
    pub k: i32,
    pub t: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    /// Largest phase change allowed across one initial panel.
    pub max_phase: f64,
    pub min_panels: usize,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-6, max_phase: FRAC_PI_4, min_panels: 24, max_panels: 400_000 }
    }
}

impl QuadratureOptions {
    /// Same tolerance, initial panels half as wide.
    pub fn refined(&self) -> Self {
        Self { max_phase: self.max_phase / 2.0, min_panels: self.min_panels * 2, ..*self }
    }
}

/// The radial integrand `2π r ψ_bump(2^{-k} r) kernel_j(r) e^{-t/2} e^{±iτλ(r)}` without
/// the Bessel factor.
#[derive(Debug, Clone, Copy)]
pub struct RadialKernel {
    args: DispersiveArgs,
    psi: f64,
    hp: f64,
    eps: f64,
    offset: f64,
    scale: f64,
}

impl RadialKernel {
    pub fn new(args: DispersiveArgs, params: &ModelParams) -> Result<Self> {
        if !(args.t >= 0.0 && args.tau >= 0.0 && args.t.is_finite() && args.tau.is_finite()) {
            return Err(Error::Domain(format!("dispersive integral needs t, tau >= 0, got t = {}, tau = {}", args.t, args.tau)));
        }
        let psi = params.psi_bar();
        let hp = params.h_prime_0();
        let eps = params.epsilon();
        let scale = 2f64.powi(args.k);
        let r_min = BUMP_SUPPORT.0 * scale;
        // Smallness needed by the stationary-phase argument on the shell.
        if psi * psi * r_min * r_min - eps * eps / 8.0 <= 0.5 * psi * psi * r_min * r_min
            || psi * hp - eps * eps / 8.0 <= 0.5 * psi * hp
        {
            return Err(Error::Precondition(format!(
                "epsilon = {eps} too large for the dispersive regime at k = {}",
                args.k
            )));
        }
        Ok(Self { args, psi, hp, eps, offset: psi * hp - eps * eps / 4.0, scale })
    }

    pub fn args(&self) -> DispersiveArgs {
        self.args
    }

    pub fn support(&self) -> (f64, f64) {
        (BUMP_SUPPORT.0 * self.scale, BUMP_SUPPORT.1 * self.scale)
    }

    /// `λ(r) = √(ψ̄²r² + ψ̄h'(0) - ε²/4)`
    pub fn lambda(&self, r: f64) -> f64 {
        (self.psi * self.psi * r * r + self.offset).sqrt()
    }

    /// Upper bound on `|d(τλ)/dr|`.
    pub fn phase_rate(&self) -> f64 {
        self.args.tau * self.psi
    }

    /// Kernel value without the `2π r` measure and the Bessel factor.
    pub fn symbol(&self, r: f64) -> Complex64 {
        let lam = self.lambda(r);
        // 1/(λ₊-λ₋) = ε/(2iλ)
        let inv_gap = Complex64::new(0.0, -self.eps / (2.0 * lam));
        let weight = match self.args.kernel {
            Kernel::Plain | Kernel::Conjugate => inv_gap,
            Kernel::Eigen => Complex64::new(-0.5, -lam / self.eps) * inv_gap,
            Kernel::Upper => inv_gap * (self.psi * r / self.eps),
            Kernel::Lower => inv_gap * (self.hp / (r * self.eps)),
        };
        let sign = if self.args.kernel == Kernel::Conjugate { -1.0 } else { 1.0 };
        let phase = Complex64::from_polar(1.0, sign * self.args.tau * lam);
        weight * phase * (psi_bump(r / self.scale) * (-0.5 * self.args.t).exp())
    }

    fn integrand(&self, r: f64, rho: f64) -> Complex64 {
        let bessel = if rho == 0.0 { 1.0 } else { libm::j0(r * rho) };
        self.symbol(r) * (2.0 * PI * r * bessel)
    }
}

/// Result of one quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureValue {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 15-point Kronrod value and `|K - G|`.
fn gauss_kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let center = f(c);
    let mut kronrod = center * GK_WEIGHTS[7];
    let mut gauss = center * GAUSS_WEIGHTS[3];
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += pair * GK_WEIGHTS[i];
        if i % 2 == 1 {
            gauss += pair * GAUSS_WEIGHTS[i / 2];
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

/// Adaptive Gauss–Kronrod over `[a, b]` with initial panels spanning at most
/// `opts.max_phase` of the combined phase rate `rate`.
///
/// The tolerance is relative to `|I|`, floored at `1e-4` of `∫|f|` so that
/// points of near-total cancellation do not chase rounding noise.
pub fn oscillatory_quadrature<F>(f: F, a: f64, b: f64, rate: f64, opts: &QuadratureOptions) -> Result<QuadratureValue>
where
    F: Fn(f64) -> Complex64,
{
    let by_phase = ((b - a) * rate / opts.max_phase).ceil() as usize;
    let n = by_phase.max(opts.min_panels).max(1);
    let h = (b - a) / n as f64;
    let mut panels: Vec<(f64, f64, Complex64, f64)> = (0..n)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == n { b } else { lo + h };
            let (v, e) = gauss_kronrod(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    loop {
        let value: Complex64 = panels.iter().map(|p| p.2).sum();
        let error: f64 = panels.iter().map(|p| p.3).sum();
        let mass: f64 = panels.iter().map(|p| p.2.norm()).sum();
        let target = opts.rel_tol * value.norm().max(1e-4 * mass);
        if error <= target {
            return Ok(QuadratureValue { value, error, panels: panels.len() });
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::Quadrature { achieved: error / value.norm().max(f64::MIN_POSITIVE), target: opts.rel_tol });
        }
        // Split every panel carrying more than its share of the error.
        let share = target / panels.len() as f64;
        let mut next = Vec::with_capacity(panels.len() * 2);
        let mut split = 0;
        for &(lo, hi, v, e) in &panels {
            if e > share && hi - lo > 1e-14 * (b - a) {
                let mid = 0.5 * (lo + hi);
                let (v1, e1) = gauss_kronrod(&f, lo, mid);
                let (v2, e2) = gauss_kronrod(&f, mid, hi);
                next.push((lo, mid, v1, e1));
                next.push((mid, hi, v2, e2));
                split += 1;
            } else {
                next.push((lo, hi, v, e));
            }
        }
        if split == 0 {
            return Err(Error::Quadrature { achieved: error / value.norm().max(f64::MIN_POSITIVE), target: opts.rel_tol });
        }
        panels = next;
    }
}

/// `I_{j,k}(t, τ, z)` at a point `z ∈ ℝ²`.
pub fn dispersive_integral(args: DispersiveArgs, z: [f64; 2], params: &ModelParams) -> Result<Complex64> {
    let kernel = RadialKernel::new(args, params)?;
    Ok(radial_integral(&kernel, z[0].hypot(z[1]), &QuadratureOptions::default())?.value)
}

/// The integral at `|z| = rho` with explicit options.
pub fn radial_integral(kernel: &RadialKernel, rho: f64, opts: &QuadratureOptions) -> Result<QuadratureValue> {
    let (a, b) = kernel.support();
    let rate = kernel.phase_rate() + rho + 1.0;
    oscillatory_quadrature(|r| kernel.integrand(r, rho), a, b, rate, opts)
}

/// Location and size of `sup_z |I_{j,k}(t, τ, z)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersivePeak {
    pub rho: f64,
    pub modulus: f64,
}

/// `sup_z |I|`, by a scan over `|z|` followed by golden-section refinement of
/// the best few local maxima.
///
/// Waves leave the origin at group speed at most `ψ̄`, so the scan covers
/// `|z| ≤ τψ̄` plus a margin of a few wavelengths of the lowest frequency.
pub fn dispersive_sup(args: DispersiveArgs, params: &ModelParams, opts: &QuadratureOptions) -> Result<DispersivePeak> {
    let kernel = RadialKernel::new(args, params)?;
    let scale = 2f64.powi(args.k);
    let rho_max = kernel.phase_rate() + 12.0 * (1.0 / scale).max(1.0);
    let step = 0.5 / (BUMP_SUPPORT.1 * scale);
    let n = (rho_max / step).ceil() as usize + 1;
    let eval = |rho: f64| radial_integral(&kernel, rho, opts).map(|q| q.value.norm());
    let values = (0..n).map(|i| eval(i as f64 * step)).collect::<Result<Vec<_>>>()?;

    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { values[i - 1] };
            let right = if i + 1 == n { f64::NEG_INFINITY } else { values[i + 1] };
            values[i] >= left && values[i] >= right
        })
        .collect();
    candidates.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    candidates.truncate(4);

    let mut best = DispersivePeak { rho: 0.0, modulus: values[0] };
    for &i in &candidates {
        let lo = (i as f64 - 1.0).max(0.0) * step;
        let hi = (i as f64 + 1.0) * step;
        let peak = golden_max(&eval, lo, hi, 1e-6 * step)?;
        let peak = if peak.modulus >= values[i] { peak } else { DispersivePeak { rho: i as f64 * step, modulus: values[i] } };
        if peak.modulus > best.modulus {
            best = peak;
        }
    }
    Ok(best)
}

fn golden_max<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<DispersivePeak> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { DispersivePeak { rho: c, modulus: fc } } else { DispersivePeak { rho: d, modulus: fd } })
}

/// Right-hand side of the dispersive estimate for kernel `j` with unit constant
/// (`N = 2`).
pub fn dispersive_bound(kernel: Kernel, k: i32, t: f64, tau: f64, epsilon: f64) -> f64 {
    const N: i32 = 2;
    let two_k = 2f64.powi(k);
    let tail = (-0.5 * t).exp() * (two_k / (two_k + 1.0)).min(tau.powf(-0.5));
    let head = match kernel {
        Kernel::Plain | Kernel::Conjugate => epsilon * 2f64.powi((N - 1) * k) * (1.0 / two_k).max(1.0),
        Kernel::Eigen => 2f64.powi(N * k) * 2f64.powi(-2 * k).max(1.0),
        Kernel::Upper => 2f64.powi(N * k) * (1.0 / two_k).max(1.0),
        Kernel::Lower => 2f64.powi((N - 2) * k) * (1.0 / two_k).max(1.0),
    };
    head * tail
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::default().with_epsilon(0.1).unwrap()
    }

    fn args(kernel: Kernel, k: i32, t: f64, tau: f64) -> DispersiveArgs {
        DispersiveArgs { kernel, k, t, tau }
    }

    /// Composite Gauss–Legendre nodes on `[-1, 1]` via Newton iteration.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for j in 2..=n {
                        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    }

    /// Tensor-product rule over the square containing the annulus.
    fn tensor_product(kernel: &RadialKernel, z: [f64; 2], panels: usize, order: usize) -> Complex64 {
        let (_, b) = kernel.support();
        let rule = gauss_legendre(order);
        let h = 2.0 * b / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let c = -b + (p as f64 + 0.5) * h;
            for &(x, w) in &rule {
                nodes.push((c + 0.5 * h * x, 0.5 * h * w));
            }
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for &(x, wx) in &nodes {
            for &(y, wy) in &nodes {
                let r = x.hypot(y);
                if r == 0.0 {
                    continue;
                }
                let s = kernel.symbol(r);
                if s == Complex64::new(0.0, 0.0) {
                    continue;
                }
                sum += s * Complex64::from_polar(wx * wy, x * z[0] + y * z[1]);
            }
        }
        sum
    }

    #[test]
    fn bump_shape() {
        assert_eq!(psi_bump(0.1), 0.0);
        assert_eq!(psi_bump(3.2), 0.0);
        for x in [5.0 / 6.0, 1.0, 2.0, 12.0 / 5.0] {
            assert_eq!(psi_bump(x), 1.0);
        }
        assert!(psi_bump(0.5) > 0.0 && psi_bump(0.5) < 1.0);
        assert!(psi_bump(2.7) > 0.0 && psi_bump(2.7) < 1.0);
    }

    #[test]
    fn kernel_indices_round_trip() {
        for j in 1..=5 {
            assert_eq!(Kernel::from_index(j).unwrap().index(), j);
        }
        assert!(Kernel::from_index(0).is_err());
        assert!(Kernel::from_index(6).is_err());
    }

    #[test]
    fn radial_reduction_matches_tensor_product() {
        let p = params();
        for (kernel, tau, z) in [
            (Kernel::Plain, 1.0, [0.7, -0.3]),
            (Kernel::Eigen, 2.0, [1.5, 0.5]),
            (Kernel::Lower, 0.5, [0.0, 0.0]),
        ] {
            let a = args(kernel, 0, 0.5, tau);
            let radial = dispersive_integral(a, z, &p).unwrap();
            let oracle = tensor_product(&RadialKernel::new(a, &p).unwrap(), z, 48, 24);
            let rel = (radial - oracle).norm() / oracle.norm();
            assert!(rel < 1e-6, "{kernel:?}: {radial} vs {oracle} ({rel:e})");
        }
    }

    #[test]
    fn phase_free_integral_is_imaginary() {
        let p = params();
        let t = 1.0;
        let value = dispersive_integral(args(Kernel::Plain, 1, t, 0.0), [0.0, 0.0], &p).unwrap();
        assert!(value.re.abs() < 1e-12 * value.im.abs());
        // Independent one-dimensional evaluation of e^{-t/2}∫ψ(2^{-k}|ξ|)ε/(2iλ) dξ.
        let (psi, hp, eps) = (p.psi_bar(), p.h_prime_0(), p.epsilon());
        let n = 200_000;
        let (a, b) = (2.0 / 6.0, 6.0);
        let h = (b - a) / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let r = a + (i as f64 + 0.5) * h;
            let lam = (psi * psi * r * r + psi * hp - eps * eps / 4.0).sqrt();
            sum += 2.0 * PI * r * psi_bump(r / 2.0) * eps / (2.0 * lam) * h;
        }
        let expected = -(-0.5 * t).exp() * sum;
        assert!((value.im - expected).abs() < 1e-8 * expected.abs());
    }

    #[test]
    fn refinement_changes_little() {
        let p = params();
        let kernel = RadialKernel::new(args(Kernel::Upper, 1, 1.0, 16.0), &p).unwrap();
        let opts = QuadratureOptions::default();
        for rho in [0.0, 3.0, 15.5] {
            let a = radial_integral(&kernel, rho, &opts).unwrap().value;
            let b = radial_integral(&kernel, rho, &opts.refined()).unwrap().value;
            assert!((a - b).norm() <= 1e-6 * b.norm(), "rho {rho}");
        }
    }

    #[test]
    fn sup_decays_in_tau() {
        let p = params();
        let opts = QuadratureOptions::default();
        let peaks: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
            .iter()
            .map(|&tau| dispersive_sup(args(Kernel::Plain, 1, 1.0, tau), &p, &opts).unwrap().modulus)
            .collect();
        for w in peaks.windows(2) {
            assert!(w[0] > w[1], "{peaks:?}");
        }
        for w in peaks[1..].windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio >= 2f64.sqrt() && ratio <= 4.0, "{peaks:?}");
        }
    }

    #[test]
    fn quadrature_failure_is_reported() {
        let opts = QuadratureOptions { max_panels: 30, ..Default::default() };
        let err = oscillatory_quadrature(|r| Complex64::new((1.0 / r).sin(), 0.0), 1e-4, 1.0, 1.0, &opts).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn overlarge_epsilon_is_rejected() {
        let p = ModelParams::default().with_epsilon(1.0).unwrap();
        assert!(matches!(RadialKernel::new(args(Kernel::Plain, -4, 0.0, 1.0), &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn bound_formulas() {
        let eps = 0.1;
        let b = dispersive_bound(Kernel::Plain, 0, 0.0, 1e8, eps);
        assert!((b - eps * 1e-4).abs() < 1e-18);
        for kernel in Kernel::ALL {
            let r = dispersive_bound(kernel, 1, 3.0, 9.0, eps) / dispersive_bound(kernel, 1, 1.0, 9.0, eps);
            assert!((r - (-1f64).exp()).abs() < 1e-15);
        }
        for k in [-1, 0, 1, 2] {
            let r = dispersive_bound(Kernel::Lower, k, 1.0, 4.0, eps) / dispersive_bound(Kernel::Upper, k, 1.0, 4.0, eps);
            assert!((r - 2f64.powi(-2 * k)).abs() < 1e-15);
        }
    }
}
