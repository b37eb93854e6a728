//! Physical parameters, the symmetrizing variables and the nonlinear coupling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    dealias, divergence, grad_inverse_laplacian, gradient, leray_project, SpectralField, TorusGrid,
};

/// Polytropic pressure `P(n) = A n^γ`, background density `n̄` and the
/// scaled electron mass `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    gamma: f64,
    a: f64,
    n_bar: f64,
    epsilon: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { gamma: 2.0, a: 0.5, n_bar: 1.0, epsilon: 0.1 }
    }
}

impl ModelParams {
    pub fn new(gamma: f64, a: f64, n_bar: f64, epsilon: f64) -> Result<Self> {
        let errors = Self::violations(gamma, a, n_bar, epsilon);
        if !errors.is_empty() {
            return Err(Error::Config(errors.join("; ")));
        }
        Ok(Self { gamma, a, n_bar, epsilon })
    }

    /// Every violated constraint, for reporting all of them at once.
    pub fn violations(gamma: f64, a: f64, n_bar: f64, epsilon: f64) -> Vec<String> {
        let mut out = Vec::new();
        if !(gamma >= 1.0 && gamma.is_finite()) {
            out.push(format!("gamma must be >= 1, got {gamma}"));
        }
        if !(a > 0.0 && a.is_finite()) {
            out.push(format!("A must be positive, got {a}"));
        }
        if !(n_bar > 0.0 && n_bar.is_finite()) {
            out.push(format!("n_bar must be positive, got {n_bar}"));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            out.push(format!("epsilon must lie in (0, 1], got {epsilon}"));
        }
        out
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.gamma, self.a, self.n_bar, epsilon)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n_bar(&self) -> f64 {
        self.n_bar
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn isothermal(&self) -> bool {
        self.gamma == 1.0
    }

    /// Sound speed at the background density.
    pub fn psi_bar(&self) -> f64 {
        (self.a * self.gamma).sqrt() * self.n_bar.powf((self.gamma - 1.0) / 2.0)
    }

    /// `(Aγ)^{-1/2} n̄^{(3-γ)/2}`
    pub fn h_prime_0(&self) -> f64 {
        (self.a * self.gamma).powf(-0.5) * self.n_bar.powf((3.0 - self.gamma) / 2.0)
    }

    /// `ψ(n) = √P'(n)`
    pub fn sound_speed(&self, n: f64) -> f64 {
        (self.a * self.gamma).sqrt() * n.powf((self.gamma - 1.0) / 2.0)
    }

    /// Whether `m` (unscaled) lies in the domain `(γ-1)/2·m + ψ̄ > 0`.
    pub fn in_domain(&self, m: f64) -> bool {
        m.is_finite() && (self.gamma - 1.0) / 2.0 * m + self.psi_bar() > 0.0
    }

    fn check_domain(&self, m: f64) -> Result<()> {
        if self.in_domain(m) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "m = {m} leaves the vacuum-free domain (gamma - 1)/2 m + psi_bar > 0"
            )))
        }
    }

    /// Symmetrizing variable of a density.
    pub fn m_of_n(&self, n: f64) -> Result<f64> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain(format!("density must be positive, got {n}")));
        }
        Ok(self.m_of_perturbation(n - self.n_bar))
    }

    /// `m` as a function of `δn = n - n̄`, accurate for small `δn`.
    pub fn m_of_perturbation(&self, dn: f64) -> f64 {
        let x = libm::log1p(dn / self.n_bar);
        if self.isothermal() {
            self.a.sqrt() * x
        } else {
            let g = (self.gamma - 1.0) / 2.0;
            self.psi_bar() / g * libm::expm1(g * x)
        }
    }

    pub fn n_of_m(&self, m: f64) -> Result<f64> {
        self.check_domain(m)?;
        Ok(self.n_bar + self.h(m)?)
    }

    /// `h(m) = n(m) - n̄`
    pub fn h(&self, m: f64) -> Result<f64> {
        self.check_domain(m)?;
        Ok(self.h_unchecked(m))
    }

    fn h_unchecked(&self, m: f64) -> f64 {
        if self.isothermal() {
            return self.n_bar * libm::expm1(m / self.a.sqrt());
        }
        let u = (self.gamma - 1.0) * m / (2.0 * self.psi_bar());
        if self.gamma == 3.0 {
            return self.n_bar * u;
        }
        let beta = 2.0 / (self.gamma - 1.0);
        self.n_bar * libm::expm1(beta * libm::log1p(u))
    }

    /// `H(m) = h(m)/m - h'(0)`, zero at the origin.
    pub fn big_h(&self, m: f64) -> Result<f64> {
        self.check_domain(m)?;
        Ok(self.big_h_unchecked(m))
    }

    fn big_h_unchecked(&self, m: f64) -> f64 {
        if m == 0.0 {
            return 0.0;
        }
        if self.isothermal() {
            let y = m / self.a.sqrt();
            return self.n_bar * expm1_minus_linear(y) / m;
        }
        if self.gamma == 3.0 {
            return 0.0;
        }
        let u = (self.gamma - 1.0) * m / (2.0 * self.psi_bar());
        let beta = 2.0 / (self.gamma - 1.0);
        let y = beta * libm::log1p(u);
        self.n_bar * (expm1_minus_linear(y) + beta * log1p_minus_linear(u)) / m
    }

    /// `ε^{-1} h(ε m)` for the scaled variable.
    pub fn h_eps(&self, m_scaled: f64) -> Result<f64> {
        let m = self.epsilon * m_scaled;
        self.check_domain(m)?;
        Ok(m_scaled * (self.h_prime_0() + self.big_h_unchecked(m)))
    }

    /// `(γ-1)/2·m + ψ̄ ≥ margin·ψ̄`
    pub fn vacuum_margin_ok(&self, m: f64, margin: f64) -> bool {
        (self.gamma - 1.0) / 2.0 * m + self.psi_bar() >= margin * self.psi_bar()
    }
}

/// `e^y - 1 - y`
fn expm1_minus_linear(y: f64) -> f64 {
    if y.abs() < 0.05 {
        let mut term = y * y / 2.0;
        let mut sum = term;
        for k in 3..14 {
            term *= y / k as f64;
            sum += term;
        }
        sum
    } else {
        libm::expm1(y) - y
    }
}

/// `ln(1 + u) - u`
fn log1p_minus_linear(u: f64) -> f64 {
    if u.abs() < 0.05 {
        let mut pow = u * u;
        let mut sum = 0.0;
        for k in 2..16 {
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            sum += sign * pow / k as f64;
            pow *= u;
        }
        sum
    } else {
        libm::log1p(u) - u
    }
}

/// The triple `(m^ε, v^ε, ∇φ^ε)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledState {
    pub m: SpectralField,
    pub v: SpectralField,
    pub grad_phi: SpectralField,
    pub time: f64,
}

impl ScaledState {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            m: SpectralField::zeros(grid, 1),
            v: SpectralField::zeros(grid, grid.dim()),
            grad_phi: SpectralField::zeros(grid, grid.dim()),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.m.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.m.is_finite() && self.v.is_finite() && self.grad_phi.is_finite()
    }

    /// `‖m‖ + ‖v‖ + ‖∇φ‖` in `L²`.
    pub fn l2_norm(&self) -> f64 {
        self.m.l2_norm() + self.v.l2_norm() + self.grad_phi.l2_norm()
    }

    /// Physical-space minimum of `(γ-1)/2·εm + ψ̄` divided by `ψ̄`.
    pub fn vacuum_ratio(&self, params: &ModelParams) -> f64 {
        let g = (params.gamma() - 1.0) / 2.0;
        let min_m = self.m.to_physical().into_iter().fold(f64::INFINITY, f64::min);
        (g * params.epsilon() * min_m + params.psi_bar()) / params.psi_bar()
    }

    /// Recovers `(n - n̄, v)` in physical space.
    pub fn unscale(&self, params: &ModelParams) -> Result<(Vec<f64>, Vec<f64>)> {
        let eps = params.epsilon();
        let dn = self
            .m
            .to_physical()
            .into_iter()
            .map(|m| params.h(eps * m))
            .collect::<Result<Vec<_>>>()?;
        Ok((dn, self.v.to_physical()))
    }
}

/// Default smallness of the scaled initial data (sup norm of `(m₀^ε, v₀)`).
pub const DEFAULT_SMALLNESS: f64 = 0.05;

/// Ill-prepared data `n₀ = n̄ + ε n₀₁`, velocity `v₀`.
pub fn build_ill_prepared(n01: &SpectralField, v0: &SpectralField, params: &ModelParams) -> Result<ScaledState> {
    build_ill_prepared_with(n01, v0, params, DEFAULT_SMALLNESS)
}

pub fn build_ill_prepared_with(
    n01: &SpectralField,
    v0: &SpectralField,
    params: &ModelParams,
    smallness: f64,
) -> Result<ScaledState> {
    let grid = *n01.grid();
    if n01.components() != 1 || v0.components() != grid.dim() || *v0.grid() != grid {
        return Err(Error::Config("n01 must be scalar and v0 an N-vector on the same grid".into()));
    }
    if n01.mean(0).abs() * grid.volume().sqrt() > 1e-12 * n01.l2_norm() && n01.mean(0) != 0.0 {
        return Err(Error::Precondition(format!(
            "density perturbation must be mean-zero, mean = {:e}",
            n01.mean(0)
        )));
    }
    let eps = params.epsilon();
    let samples = n01.to_physical();
    let mut m = Vec::with_capacity(samples.len());
    for s in &samples {
        let dn = eps * s;
        if params.n_bar() + dn <= 0.0 {
            return Err(Error::Precondition(format!(
                "initial density reaches vacuum: n_bar + eps n01 = {}",
                params.n_bar() + dn
            )));
        }
        m.push(params.m_of_perturbation(dn) / eps);
    }
    let amplitude = m
        .iter()
        .chain(v0.to_physical().iter())
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    if amplitude > smallness {
        return Err(Error::Precondition(format!(
            "scaled initial data amplitude {amplitude:e} exceeds the smallness bound {smallness:e}"
        )));
    }
    let mut n01_zero_mean = n01.clone();
    n01_zero_mean.component_mut(0)[0] = num_complex::Complex64::new(0.0, 0.0);
    Ok(ScaledState {
        m: SpectralField::from_physical(grid, 1, &m)?,
        v: v0.clone(),
        grad_phi: grad_inverse_laplacian(&n01_zero_mean)?,
        time: 0.0,
    })
}

/// Pointwise values of `ε^{-1}h(εm)` for physical samples of `m`.
pub fn poisson_source(m_samples: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    m_samples.iter().map(|&m| params.h_eps(m)).collect()
}

/// Solves `Δφ = ε^{-1}h(εm)` for `∇φ`. The mean of the right-hand side is
/// removed first and returned.
pub fn solve_poisson(m: &SpectralField, params: &ModelParams) -> Result<(SpectralField, f64)> {
    let grid = *m.grid();
    let rhs = poisson_source(&m.to_physical(), params)?;
    let mut rhs = SpectralField::from_physical(grid, 1, &rhs)?;
    let mean = rhs.mean(0);
    rhs.component_mut(0)[0] = num_complex::Complex64::new(0.0, 0.0);
    Ok((grad_inverse_laplacian(&rhs)?, mean))
}

/// Nonlinear sources of the acoustic splitting:
/// `F = -v·∇m - (γ-1)/2·m div v`,
/// `G = -v·∇v - (γ-1)/2·m∇m + ∇Δ^{-1}(H(εm)m)/ε`.
pub fn source_terms(state: &ScaledState, params: &ModelParams) -> Result<(SpectralField, SpectralField)> {
    source_terms_opts(state, params, true)
}

pub fn source_terms_opts(
    state: &ScaledState,
    params: &ModelParams,
    dealiased: bool,
) -> Result<(SpectralField, SpectralField)> {
    let parts = nonlinear_parts(state, params)?;
    let mut f = parts.f;
    let mut g = parts.transport;
    g.axpy(1.0, &parts.poisson_correction);
    if dealiased {
        f = dealias(&f);
        g = dealias(&g);
    }
    Ok((f, g))
}

/// The nonlinear sources with the Poisson correction kept separate.
pub struct NonlinearParts {
    pub f: SpectralField,
    pub transport: SpectralField,
    pub poisson_correction: SpectralField,
}

pub fn nonlinear_parts(state: &ScaledState, params: &ModelParams) -> Result<NonlinearParts> {
    let grid = *state.grid();
    let n = grid.len();
    let dim = grid.dim();
    let g = (params.gamma() - 1.0) / 2.0;
    let eps = params.epsilon();

    let m = state.m.to_physical();
    let v = state.v.to_physical();
    let grad_m = gradient(&state.m)?.to_physical();
    let div_v = divergence(&state.v)?.to_physical();
    let mut grad_v = Vec::with_capacity(dim);
    for a in 0..dim {
        grad_v.push(gradient(&state.v.extract(a))?.to_physical());
    }

    let mut f = vec![0.0; n];
    let mut transport = vec![0.0; dim * n];
    let mut hm = vec![0.0; n];
    for k in 0..n {
        let mut adv_m = 0.0;
        for b in 0..dim {
            adv_m += v[b * n + k] * grad_m[b * n + k];
        }
        f[k] = -adv_m - g * m[k] * div_v[k];
        for a in 0..dim {
            let mut adv = 0.0;
            for b in 0..dim {
                adv += v[b * n + k] * grad_v[a][b * n + k];
            }
            transport[a * n + k] = -adv - g * m[k] * grad_m[a * n + k];
        }
        let em = eps * m[k];
        if !params.in_domain(em) {
            return Err(Error::Domain(format!(
                "eps m = {em} leaves the domain of h during the source evaluation"
            )));
        }
        hm[k] = params.big_h_unchecked(em) * m[k];
    }
    let hm = SpectralField::from_physical(grid, 1, &hm)?;
    let mut correction = grad_inverse_laplacian(&hm)?;
    correction.scale(1.0 / eps);
    Ok(NonlinearParts {
        f: SpectralField::from_physical(grid, 1, &f)?,
        transport: SpectralField::from_physical(grid, dim, &transport)?,
        poisson_correction: correction,
    })
}

/// Curl-free defect `‖P∇φ‖ / ‖∇φ‖`.
pub fn curl_defect(grad_phi: &SpectralField) -> Result<f64> {
    let norm = grad_phi.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(leray_project(grad_phi)?.0.l2_norm() / norm)
}

/// Kawashima symbol `K(ξ)`, row-major `(N+1)×(N+1)`.
pub fn kawashima_matrix(xi: &[f64]) -> Result<Vec<f64>> {
    let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Domain("Kawashima matrix is undefined at xi = 0".into()));
    }
    let n = xi.len() + 1;
    let mut k = vec![0.0; n * n];
    for (j, x) in xi.iter().enumerate() {
        k[j + 1] = x / norm;
        k[(j + 1) * n] = -x / norm;
    }
    Ok(k)
}

/// `Σ_j ξ_j A_j^ε(0)` of the symmetric hyperbolic part.
pub fn hyperbolic_symbol(xi: &[f64], params: &ModelParams) -> Vec<f64> {
    let n = xi.len() + 1;
    let c = params.psi_bar() / params.epsilon();
    let mut a = vec![0.0; n * n];
    for (j, x) in xi.iter().enumerate() {
        a[j + 1] = c * x;
        a[(j + 1) * n] = c * x;
    }
    a
}

/// Frobenius residual of `K(ξ)Σξ_jA_j(0) - diag(ψ̄|ξ|/ε, -(ψ̄/ε)ξ⊗ξ/|ξ|)`.
pub fn kawashima_product_check(xi: &[f64], params: &ModelParams) -> Result<f64> {
    let k = kawashima_matrix(xi)?;
    let a = hyperbolic_symbol(xi, params);
    let n = xi.len() + 1;
    let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let c = params.psi_bar() / params.epsilon();
    let mut residual = 0.0;
    for i in 0..n {
        for j in 0..n {
            let prod: f64 = (0..n).map(|l| k[i * n + l] * a[l * n + j]).sum();
            let target = match (i, j) {
                (0, 0) => c * norm,
                (0, _) | (_, 0) => 0.0,
                _ => -c * xi[i - 1] * xi[j - 1] / norm,
            };
            residual += (prod - target).powi(2);
        }
    }
    Ok(residual.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::{random_field, rng};
    use rand::Rng;

    #[test]
    fn derived_constants() {
        let p = ModelParams::default();
        assert!((p.psi_bar() - 1.0).abs() < 1e-15);
        assert!((p.h_prime_0() - 1.0).abs() < 1e-15);
        let q = ModelParams::new(1.7, 0.8, 1.3, 0.5).unwrap();
        let pp = |n: f64| q.a() * n.powf(q.gamma());
        let d = 1e-5;
        let fd = (pp(q.n_bar() + d) - pp(q.n_bar() - d)) / (2.0 * d);
        assert!((fd.sqrt() - q.psi_bar()).abs() < 1e-8);
        assert!((q.psi_bar() * q.h_prime_0() - q.n_bar()).abs() < 1e-14);
    }

    #[test]
    fn invalid_parameters_are_all_reported() {
        let err = ModelParams::new(0.5, -1.0, 1.0, 2.0).unwrap_err();
        let Error::Config(msg) = err else { panic!() };
        assert!(msg.contains("gamma must be >= 1"));
        assert!(msg.contains("A must be positive"));
        assert!(msg.contains("epsilon"));
    }

    #[test]
    fn variable_change_round_trip() {
        for gamma in [1.0, 1.4, 2.0, 3.0] {
            let p = ModelParams::new(gamma, 0.7, 1.2, 0.3).unwrap();
            assert_eq!(p.m_of_n(p.n_bar()).unwrap(), 0.0);
            let mut r = rng(11);
            for _ in 0..100 {
                let n: f64 = r.gen_range(0.1..10.0);
                let back = p.n_of_m(p.m_of_n(n).unwrap()).unwrap();
                assert!((back - n).abs() <= 1e-12 * n, "gamma {gamma}: {n} -> {back}");
            }
            assert!(p.m_of_n(0.0).is_err());
        }
        let lin = ModelParams::new(3.0, 1.0 / 3.0, 1.0, 0.5).unwrap();
        assert!((lin.m_of_n(2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn h_and_big_h() {
        for gamma in [1.0, 1.5, 2.0, 2.5] {
            let p = ModelParams::new(gamma, 0.6, 0.9, 0.2).unwrap();
            assert_eq!(p.h(0.0).unwrap(), 0.0);
            assert_eq!(p.big_h(0.0).unwrap(), 0.0);
            let d = 1e-5;
            let fd = (p.h(d).unwrap() - p.h(-d).unwrap()) / (2.0 * d);
            assert!((fd - p.h_prime_0()).abs() < 1e-7);
            for m in [-0.3, -1e-4, 1e-9, 0.02, 0.2, 1.5] {
                let lhs = p.h(m).unwrap();
                let rhs = m * (p.big_h(m).unwrap() + p.h_prime_0());
                assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-300), "gamma {gamma} m {m}");
            }
            // first-order convergence of h(m)/m
            let errs: Vec<f64> = (2..=6)
                .map(|k| (p.h(10f64.powi(-k)).unwrap() / 10f64.powi(-k) - p.h_prime_0()).abs())
                .collect();
            for w in errs.windows(2) {
                let ratio = w[0] / w[1];
                assert!(ratio > 8.0 && ratio < 12.0, "ratio {ratio}");
            }
        }
        let lin = ModelParams::new(3.0, 1.0 / 3.0, 1.0, 0.1).unwrap();
        for m in [-0.5, 0.1, 3.0] {
            assert_eq!(lin.h(m).unwrap(), m);
            assert_eq!(lin.big_h(m).unwrap(), 0.0);
        }
        let p = ModelParams::default();
        assert!(matches!(p.h(-2.5), Err(Error::Domain(_))));
    }

    #[test]
    fn big_h_series_branch_is_continuous() {
        let p = ModelParams::new(1.4, 1.0, 1.0, 1.0).unwrap();
        let psi = p.psi_bar();
        let u_edge = 0.05 * 2.0 * psi / 0.4;
        for m in [u_edge * 0.999, u_edge * 1.001] {
            let direct = (p.h(m).unwrap() / m) - p.h_prime_0();
            assert!((p.big_h(m).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn ill_prepared_zero_and_single_mode() {
        let g = TorusGrid::new(2, 16, 8.0).unwrap();
        let p = ModelParams::default();
        let zero = build_ill_prepared(&SpectralField::zeros(g, 1), &SpectralField::zeros(g, 2), &p).unwrap();
        assert_eq!(zero, ScaledState::zeros(g));

        let a = 0.01;
        let w = 2.0 * std::f64::consts::PI / 8.0;
        let n01 = SpectralField::from_fn(g, 1, |x, _| a * (w * x[0]).cos());
        let s = build_ill_prepared(&n01, &SpectralField::zeros(g, 2), &p).unwrap();
        let c = s.grad_phi.coefficient(0, [1, 0, 0]);
        // ∇Δ^{-1}: coefficient -iξ/|ξ|² times a/2
        assert!((c - num_complex::Complex64::new(0.0, -a / (2.0 * w))).norm() < 1e-15);
        assert!(s.grad_phi.coefficient(1, [1, 0, 0]).norm() < 1e-18);
        let mut rest = s.grad_phi.clone();
        rest.set_coefficient(0, [1, 0, 0], num_complex::Complex64::new(0.0, 0.0));
        rest.set_coefficient(0, [-1, 0, 0], num_complex::Complex64::new(0.0, 0.0));
        assert!(rest.max_coefficient() < 1e-18);
    }

    #[test]
    fn ill_prepared_uniform_in_epsilon_and_unscales() {
        let g = TorusGrid::new(2, 16, 8.0).unwrap();
        let n01 = random_field(g, 1, &mut rng(2), 3, 1.0, true).scaled(0.01);
        let v0 = random_field(g, 2, &mut rng(3), 3, 1.0, false).scaled(0.005);
        let p1 = ModelParams::default().with_epsilon(0.1).unwrap();
        let p2 = ModelParams::default().with_epsilon(0.01).unwrap();
        let s1 = build_ill_prepared_with(&n01, &v0, &p1, 1.0).unwrap();
        let s2 = build_ill_prepared_with(&n01, &v0, &p2, 1.0).unwrap();
        let ratio = s1.m.l2_norm() / s2.m.l2_norm();
        assert!((ratio - 1.0).abs() < 0.1);

        let (dn, v) = s1.unscale(&p1).unwrap();
        let n01p = n01.to_physical();
        for (d, e) in dn.iter().zip(&n01p) {
            assert!((d - 0.1 * e).abs() <= 1e-14);
        }
        assert_eq!(v, v0.to_physical());

        let (gp, mean) = solve_poisson(&s1.m, &p1).unwrap();
        assert!(mean.abs() < 1e-12);
        assert!(gp.sub(&s1.grad_phi).l2_norm() <= 1e-10 * s1.grad_phi.l2_norm());
    }

    #[test]
    fn ill_prepared_rejects_bad_data() {
        let g = TorusGrid::new(1, 16, 8.0).unwrap();
        let p = ModelParams::default();
        let with_mean = SpectralField::from_fn(g, 1, |x, _| 0.01 + 0.01 * x[0].sin());
        assert!(matches!(
            build_ill_prepared(&with_mean, &SpectralField::zeros(g, 1), &p),
            Err(Error::Precondition(_))
        ));
        let deep = SpectralField::from_fn(g, 1, |x, _| 20.0 * (2.0 * std::f64::consts::PI * x[0] / 8.0).cos());
        assert!(matches!(
            build_ill_prepared_with(&deep, &SpectralField::zeros(g, 1), &p, f64::INFINITY),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn source_terms_of_special_states() {
        let g = TorusGrid::new(2, 16, 8.0).unwrap();
        let p = ModelParams::default();
        let (f, gg) = source_terms(&ScaledState::zeros(g), &p).unwrap();
        assert_eq!(f.max_coefficient(), 0.0);
        assert_eq!(gg.max_coefficient(), 0.0);

        let mut s = ScaledState::zeros(g);
        s.m = random_field(g, 1, &mut rng(4), 3, 1.0, true).scaled(0.05);
        let parts = nonlinear_parts(&s, &p).unwrap();
        assert!(parts.f.max_coefficient() < 1e-18);
        let expected = gradient(&s.m).unwrap();
        let mp = s.m.to_physical();
        let gp = expected.to_physical();
        let n = g.len();
        let tr = parts.transport.to_physical();
        for a in 0..2 {
            for k in 0..n {
                assert!((tr[a * n + k] + 0.5 * mp[k] * gp[a * n + k]).abs() < 1e-15);
            }
        }
        assert!(parts.poisson_correction.l2_norm() > 0.0);

        let lin = ModelParams::new(3.0, 1.0 / 3.0, 1.0, 0.1).unwrap();
        assert_eq!(nonlinear_parts(&s, &lin).unwrap().poisson_correction.max_coefficient(), 0.0);
    }

    #[test]
    fn kawashima_layout_and_product() {
        let k = kawashima_matrix(&[1.0, 0.0]).unwrap();
        assert_eq!(k, vec![0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(kawashima_matrix(&[0.0, 0.0]).is_err());
        let mut r = rng(5);
        for _ in 0..200 {
            let xi = [r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)];
            let k = kawashima_matrix(&xi).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(k[i * 3 + j], -k[j * 3 + i]);
                }
            }
            for eps in [1.0, 0.1] {
                let p = ModelParams::default().with_epsilon(eps).unwrap();
                assert!(kawashima_product_check(&xi, &p).unwrap() <= 1e-13);
            }
        }
    }
}
