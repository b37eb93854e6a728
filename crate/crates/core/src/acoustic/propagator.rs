use num_complex::Complex64;

use super::symbol::{acoustic_symbol, phi1, phi2, AcousticSymbol, Mat2};
use crate::error::{Error, Result};
use crate::plasma::{nonlinear_parts, solve_poisson, ModelParams, ScaledState};
use crate::spectral::{dealias, grad_inverse_laplacian, leray_project, SpectralField, TorusGrid};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Acoustic coordinates: `m`, `d = Λ^{-1}div Qv` and the solenoidal part `Pv`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticVars {
    pub m: SpectralField,
    pub d: SpectralField,
    pub pv: SpectralField,
}

impl AcousticVars {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            m: SpectralField::zeros(grid, 1),
            d: SpectralField::zeros(grid, 1),
            pv: SpectralField::zeros(grid, grid.dim()),
        }
    }

    pub fn from_mv(m: &SpectralField, v: &SpectralField) -> Result<Self> {
        let (pv, d) = split_velocity(v)?;
        Ok(Self { m: m.clone(), d, pv })
    }

    pub fn velocity(&self) -> SpectralField {
        join_velocity(&self.d, &self.pv)
    }

    pub fn grid(&self) -> &TorusGrid {
        self.m.grid()
    }

    pub fn axpy(&mut self, a: f64, other: &AcousticVars) {
        self.m.axpy(a, &other.m);
        self.d.axpy(a, &other.d);
        self.pv.axpy(a, &other.pv);
    }

    pub fn l2_norm(&self) -> f64 {
        (self.m.l2_norm().powi(2) + self.d.l2_norm().powi(2) + self.pv.l2_norm().powi(2)).sqrt()
    }
}

/// `v ↦ (Pv, d)` with `d̂ = iξ·v̂/|ξ|`.
pub fn split_velocity(v: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let (pv, _) = leray_project(v)?;
    let grid = *v.grid();
    let mut d = SpectralField::zeros(grid, 1);
    for k in 0..grid.len() {
        let xi = grid.frequency(k);
        let r = grid.frequency_norm(k);
        if r == 0.0 {
            continue;
        }
        let mut acc = ZERO;
        for a in 0..grid.dim() {
            acc += v.component(a)[k] * xi[a];
        }
        d.component_mut(0)[k] = I * acc / r;
    }
    Ok((pv, d))
}

/// `(d, Pv) ↦ v` with `Q̂v = -iξd̂/|ξ|`.
pub fn join_velocity(d: &SpectralField, pv: &SpectralField) -> SpectralField {
    let grid = *d.grid();
    let mut v = pv.clone();
    for k in 0..grid.len() {
        let r = grid.frequency_norm(k);
        if r == 0.0 {
            continue;
        }
        let xi = grid.frequency(k);
        let dk = d.component(0)[k];
        for a in 0..grid.dim() {
            v.component_mut(a)[k] += -I * dk * (xi[a] / r);
        }
    }
    v
}

/// Acoustic symbols for every mode (`None` where `ξ = 0`).
#[derive(Debug, Clone)]
pub struct ModeTable {
    grid: TorusGrid,
    symbols: Vec<Option<AcousticSymbol>>,
}

impl ModeTable {
    pub fn new(grid: TorusGrid, params: &ModelParams) -> Result<Self> {
        let symbols = (0..grid.len())
            .map(|k| {
                let r = grid.frequency_norm(k);
                if r == 0.0 {
                    Ok(None)
                } else {
                    acoustic_symbol(r, params).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, symbols })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn symbol(&self, k: usize) -> Option<&AcousticSymbol> {
        self.symbols[k].as_ref()
    }
}

/// Propagates acoustic coordinates exactly over time `t`; the zero mode of
/// `m` is passed through and `Pv` decays as `e^{-t}`.
pub fn propagate_vars(table: &ModeTable, u: &AcousticVars, t: f64) -> AcousticVars {
    let mut out = u.clone();
    let damp = (-t).exp();
    for k in 0..table.grid.len() {
        if let Some(s) = table.symbol(k) {
            let e = s.propagator(t);
            let [m, d] = e.apply([u.m.component(0)[k], u.d.component(0)[k]]);
            out.m.component_mut(0)[k] = m;
            out.d.component_mut(0)[k] = d;
        }
    }
    out.pv.scale(damp);
    out
}

/// Exact solution of the linearized system over time `t`, with `∇φ`
/// rebuilt from the linearized Poisson relation.
pub fn apply_linear_propagator(state: &ScaledState, t: f64, params: &ModelParams) -> Result<ScaledState> {
    if !(t >= 0.0) {
        return Err(Error::Precondition(format!("propagation time must be >= 0, got {t}")));
    }
    let grid = *state.grid();
    let mean = state.m.mean(0);
    if mean != 0.0 && mean.abs() * grid.volume().sqrt() > 1e-12 * state.m.l2_norm() {
        return Err(Error::Precondition(format!("linear propagator needs mean-zero m, mean = {mean:e}")));
    }
    let table = ModeTable::new(grid, params)?;
    let u = AcousticVars::from_mv(&state.m, &state.v)?;
    let mut out = propagate_vars(&table, &u, t);
    out.m.component_mut(0)[0] = ZERO;
    Ok(ScaledState {
        grad_phi: grad_inverse_laplacian(&out.m.scaled(params.h_prime_0()))?,
        v: out.velocity(),
        m: out.m,
        time: state.time + t,
    })
}

#[derive(Debug, Clone, Copy)]
struct StepCoeffs {
    e: Mat2,
    p1: Mat2,
    p2: Mat2,
}

/// Second-order exponential time differencing (Cox–Matthews ETD2RK) for the
/// acoustic splitting, with the linear part propagated exactly.
#[derive(Debug, Clone)]
pub struct EtdIntegrator {
    params: ModelParams,
    table: ModeTable,
    dt: f64,
    coeffs: Vec<Option<StepCoeffs>>,
    dealias: bool,
}

impl EtdIntegrator {
    pub fn new(grid: TorusGrid, params: &ModelParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
        }
        let table = ModeTable::new(grid, params)?;
        let coeffs = table
            .symbols
            .iter()
            .map(|s| {
                s.map(|s| StepCoeffs {
                    e: s.propagator(dt),
                    p1: s.function(|l| phi1(l * dt) * dt),
                    p2: s.function(|l| phi2(l * dt) * dt),
                })
            })
            .collect();
        Ok(Self { params: *params, table, dt, coeffs, dealias: true })
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn table(&self) -> &ModeTable {
        &self.table
    }

    /// `E u + c₁ n₁ (+ c₂ n₂)`, mode by mode.
    fn combine(&self, base: &AcousticVars, which: Combine, n1: &AcousticVars, n2: Option<&AcousticVars>) -> AcousticVars {
        let grid = *self.table.grid();
        let h = self.dt;
        let mut out = base.clone();
        // scalar coefficients for L = 0 (mean of m) and L = -1 (Pv)
        let z = Complex64::new(-h, 0.0);
        let (pv_e, pv_c) = match which {
            Combine::First => ((-h).exp(), (phi1(z) * h).re),
            Combine::Second => (1.0, (phi2(z) * h).re),
        };
        let (m0_e, m0_c) = match which {
            Combine::First => (1.0, h),
            Combine::Second => (1.0, h / 2.0),
        };
        for k in 0..grid.len() {
            let (bm, bd) = (base.m.component(0)[k], base.d.component(0)[k]);
            let mut nm = n1.m.component(0)[k];
            let mut nd = n1.d.component(0)[k];
            if let Some(n2) = n2 {
                nm -= n2.m.component(0)[k];
                nd -= n2.d.component(0)[k];
            }
            match &self.coeffs[k] {
                Some(c) => {
                    let (lin, mat) = match which {
                        Combine::First => (c.e.apply([bm, bd]), c.p1),
                        Combine::Second => ([bm, bd], c.p2),
                    };
                    let [fm, fd] = mat.apply([nm, nd]);
                    out.m.component_mut(0)[k] = lin[0] + fm;
                    out.d.component_mut(0)[k] = lin[1] + fd;
                }
                None => {
                    out.m.component_mut(0)[k] = bm * m0_e + nm * m0_c;
                    out.d.component_mut(0)[k] = ZERO;
                }
            }
        }
        for a in 0..grid.dim() {
            let base_pv = base.pv.component(a);
            let n1_pv = n1.pv.component(a);
            let n2_pv = n2.map(|n| n.pv.component(a));
            let slot = out.pv.component_mut(a);
            for k in 0..grid.len() {
                let mut nk = n1_pv[k];
                if let Some(n2) = n2_pv {
                    nk -= n2[k];
                }
                slot[k] = base_pv[k] * pv_e + nk * pv_c;
            }
        }
        out
    }

    /// One ETD2RK step for an arbitrary nonlinearity `n(u)`.
    pub fn step_with<N>(&self, u: &AcousticVars, mut n: N) -> Result<AcousticVars>
    where
        N: FnMut(&AcousticVars) -> Result<AcousticVars>,
    {
        let nu = n(u)?;
        let a = self.combine(u, Combine::First, &nu, None);
        let na = n(&a)?;
        Ok(self.combine(&a, Combine::Second, &na, Some(&nu)))
    }

    /// Nonlinear sources `(F, Λ^{-1}div QG, PG)` in acoustic coordinates.
    pub fn sources(&self, u: &AcousticVars, time: f64) -> Result<AcousticVars> {
        let state = ScaledState {
            m: u.m.clone(),
            v: u.velocity(),
            grad_phi: SpectralField::zeros(*u.grid(), u.grid().dim()),
            time,
        };
        let parts = nonlinear_parts(&state, &self.params).map_err(|e| match e {
            Error::Domain(reason) => {
                let eps = self.params.epsilon();
                let extremum = state.m.to_physical().into_iter().fold(0.0f64, |acc, x| {
                    if (eps * x).abs() > acc.abs() {
                        eps * x
                    } else {
                        acc
                    }
                });
                Error::StepRejected { time, reason, extremum }
            }
            other => other,
        })?;
        let mut f = parts.f;
        let mut g = parts.transport;
        g.axpy(1.0, &parts.poisson_correction);
        if self.dealias {
            f = dealias(&f);
            g = dealias(&g);
        }
        let (pg, dg) = split_velocity(&g)?;
        Ok(AcousticVars { m: f, d: dg, pv: pg })
    }

    /// Full nonlinear step of a scaled state; `∇φ` is re-solved afterwards.
    /// Returns the new state and the mean removed from the Poisson source.
    pub fn step_state(&self, state: &ScaledState) -> Result<(ScaledState, f64)> {
        let u = AcousticVars::from_mv(&state.m, &state.v)?;
        let t0 = state.time;
        let next = self.step_with(&u, |x| self.sources(x, t0))?;
        let m = next.m.clone();
        if !m.is_finite() || !next.pv.is_finite() || !next.d.is_finite() {
            return Err(Error::StepRejected {
                time: t0 + self.dt,
                reason: "non-finite coefficients".into(),
                extremum: f64::NAN,
            });
        }
        let (grad_phi, mean) = solve_poisson(&m, &self.params).map_err(|e| match e {
            Error::Domain(reason) => Error::StepRejected {
                time: t0 + self.dt,
                reason,
                extremum: m.to_physical().into_iter().fold(f64::INFINITY, f64::min) * self.params.epsilon(),
            },
            other => other,
        })?;
        Ok((
            ScaledState { v: next.velocity(), m, grad_phi, time: t0 + self.dt },
            mean,
        ))
    }
}

#[derive(Debug, Clone, Copy)]
enum Combine {
    First,
    Second,
}

/// One ETD2RK step of the full nonlinear system.
pub fn etd_step(state: &ScaledState, dt: f64, params: &ModelParams) -> Result<ScaledState> {
    Ok(EtdIntegrator::new(*state.grid(), params, dt)?.step_state(state)?.0)
}
