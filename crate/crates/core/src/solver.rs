//! Nonlinear time integration of the scaled system and its diagnostics.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::acoustic::EtdIntegrator;
use crate::error::{Error, Result};
use crate::fit::{decay_fit, DecayFit};
use crate::littlewood_paley::{besov_norm_tuple, BesovParams, DyadicPartition};
use crate::plasma::{ModelParams, ScaledState};
use crate::spectral::{divergence, leray_project, SpectralField, TorusGrid};

/// Abort threshold on `((γ-1)/2·εm + ψ̄)/ψ̄`.
pub const DEFAULT_VACUUM_MARGIN: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: ModelParams,
    pub grid: TorusGrid,
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    /// Largest tolerated relative Poisson residual at a snapshot.
    pub poisson_tol: f64,
    /// Snapshot every this many steps (the final step is always recorded).
    pub record_every: usize,
    pub vacuum_margin: f64,
    /// The constant `C` tying `K₂, K₃` to `K₁` in the energy functional.
    pub energy_c: f64,
    /// Keep full states at every snapshot, not only diagnostics. The final
    /// state is kept regardless.
    pub keep_states: bool,
}

impl SolverConfig {
    pub fn new(params: ModelParams, grid: TorusGrid, dt: f64, t_end: f64) -> Self {
        Self {
            params,
            grid,
            dt,
            t_end,
            dealias: true,
            poisson_tol: 1e-10,
            record_every: 1,
            vacuum_margin: DEFAULT_VACUUM_MARGIN,
            energy_c: 5.0,
            keep_states: true,
        }
    }

    /// Every violated constraint, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("dt must be positive, got {}", self.dt));
        } else if self.dt > 0.1 {
            out.push(format!("dt must resolve the damping scale (dt <= 0.1), got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            out.push(format!("t_end must be positive, got {}", self.t_end));
        } else if self.dt > 0.0 && (self.steps() as f64 * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            out.push(format!("t_end = {} is not a multiple of dt = {}", self.t_end, self.dt));
        }
        if self.record_every == 0 {
            out.push("record_every must be at least 1".into());
        }
        if !(self.poisson_tol > 0.0) {
            out.push(format!("poisson_tol must be positive, got {}", self.poisson_tol));
        }
        if !(0.0..1.0).contains(&self.vacuum_margin) {
            out.push(format!("vacuum_margin must lie in [0, 1), got {}", self.vacuum_margin));
        }
        if !(self.energy_c > 0.0) {
            out.push(format!("energy_c must be positive, got {}", self.energy_c));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn energy_constants(&self) -> Result<EnergyConstants> {
        EnergyConstants::from_relations(&self.params, 2.0, 2.0, self.energy_c)
    }
}

/// Weights of the energy functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k1_bar: f64,
    pub k2_bar: f64,
    pub k3_bar: f64,
}

impl EnergyConstants {
    /// `K₂ = K₁/(4C)`, `K₃ = Aγψ̄/(4C²n̄^{3-γ})·K₂`, and the same relations
    /// for the barred constants.
    pub fn from_relations(params: &ModelParams, k1: f64, k1_bar: f64, c: f64) -> Result<Self> {
        if !(k1 > 0.0 && k1_bar > 0.0 && c > 0.0) {
            return Err(Error::Config(format!("energy constants need K1, K1_bar, C > 0, got {k1}, {k1_bar}, {c}")));
        }
        let ratio = params.a() * params.gamma() * params.psi_bar()
            / (4.0 * c * c * params.n_bar().powf(3.0 - params.gamma()));
        let k2 = k1 / (4.0 * c);
        let k2_bar = k1_bar / (4.0 * c);
        Ok(Self { k1, k2, k3: ratio * k2, k1_bar, k2_bar, k3_bar: ratio * k2_bar })
    }

    /// Only the weighted `L²` parts.
    pub fn weighted_l2(k1: f64, k1_bar: f64) -> Self {
        Self { k1, k2: 0.0, k3: 0.0, k1_bar, k2_bar: 0.0, k3_bar: 0.0 }
    }
}

/// Block energy functional `Q(t)` with `σ = 1 + N/2`.
pub fn energy_q(state: &ScaledState, constants: &EnergyConstants, params: &ModelParams) -> Result<f64> {
    let grid = *state.grid();
    let partition = DyadicPartition::default();
    let top = partition.top_block(&grid);
    let blocks = (top + 2) as usize;
    let sigma = 1.0 + grid.dim() as f64 / 2.0;
    let eps = params.epsilon();
    let n_bar = params.n_bar();

    let mut l2 = vec![0.0; blocks];
    let mut kawashima = vec![0.0; blocks];
    let mut cross = 0.0;
    for k in 0..grid.len() {
        let r = grid.frequency_norm(k);
        let xi = grid.frequency(k);
        let m = state.m.component(0)[k];
        let mut power = m.norm_sqr();
        let mut xi_v = Complex64::new(0.0, 0.0);
        let mut phi_v = 0.0;
        for a in 0..grid.dim() {
            let v = state.v.component(a)[k];
            let g = state.grad_phi.component(a)[k];
            power += v.norm_sqr() + g.norm_sqr() / n_bar;
            xi_v += v * xi[a];
            phi_v += (g * v.conj()).re;
        }
        if power == 0.0 {
            continue;
        }
        // Im ∫|ξ| Ŵ*K(ξ)Ŵ = 2 Im(conj(m̂) ξ·v̂) per mode
        let skew = 2.0 * (m.conj() * xi_v).im;
        for (i, q) in (-1..=top).enumerate() {
            let w = partition.block_symbol(q, r);
            if w == 0.0 {
                continue;
            }
            let w2 = w * w;
            l2[i] += w2 * power;
            kawashima[i] += w2 * skew;
            if q == -1 {
                cross += w2 * phi_v;
            }
        }
    }
    let vol = grid.volume();
    let mut total = 0.0;
    for (i, q) in (-1..=top).enumerate() {
        let (bracket, scale) = if q == -1 {
            (
                constants.k1_bar / 2.0 * 0.25 * vol * l2[i] + constants.k2_bar * eps / 2.0 * vol * kawashima[i]
                    - constants.k3_bar * eps * vol * cross,
                constants.k1_bar / 2.0 * 0.25 * vol * l2[i],
            )
        } else {
            let weight = 4f64.powi(q);
            (
                constants.k1 / 2.0 * weight * vol * l2[i] + constants.k2 * eps / 2.0 * vol * kawashima[i],
                constants.k1 / 2.0 * weight * vol * l2[i],
            )
        };
        if bracket < 0.0 {
            if bracket < -1e-12 * scale {
                return Err(Error::Config(format!(
                    "energy constants lose positivity on block q = {q} (bracket {bracket:e})"
                )));
            }
            continue;
        }
        let prefactor = if q == -1 { 1.0 } else { 2f64.powf(q as f64 * (sigma - 1.0)) };
        total += prefactor * bracket.sqrt();
    }
    Ok(total)
}

/// Spatial mean of `n - n̄ = h(εm)`.
pub fn mass_mean(state: &ScaledState, params: &ModelParams) -> Result<f64> {
    let eps = params.epsilon();
    let samples = state.m.to_physical();
    let mut sum = 0.0;
    for m in &samples {
        sum += params.h(eps * m)?;
    }
    Ok(sum / samples.len() as f64)
}

/// `‖Δφ - (ε^{-1}h(εm) - mean)‖ / ‖ε^{-1}h(εm) - mean‖`, over the modes a
/// gradient can represent (modes with zero frequency vector excluded).
pub fn poisson_residual(state: &ScaledState, params: &ModelParams) -> Result<f64> {
    let grid = *state.grid();
    let rhs = crate::plasma::poisson_source(&state.m.to_physical(), params)?;
    let mut rhs = SpectralField::from_physical(grid, 1, &rhs)?;
    for k in 0..grid.len() {
        if grid.frequency_norm(k) == 0.0 {
            rhs.component_mut(0)[k] = Complex64::new(0.0, 0.0);
        }
    }
    let lap = divergence(&state.grad_phi)?;
    let norm = rhs.l2_norm();
    let res = lap.sub(&rhs).l2_norm();
    Ok(if norm == 0.0 { res } else { res / norm })
}

/// Relative residual of `div v + (ε div∇φ_t + div(h(εm)v))/n̄ = 0`, with
/// `∇φ_t` a backward difference between consecutive states.
pub fn mass_identity_residual(prev: &ScaledState, next: &ScaledState, params: &ModelParams) -> Result<f64> {
    let dt = next.time - prev.time;
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("states must be ordered in time, dt = {dt}")));
    }
    let grid = *next.grid();
    let n = grid.len();
    let eps = params.epsilon();
    let div_v = divergence(&next.v)?;
    let mut dphi = next.grad_phi.sub(&prev.grad_phi);
    dphi.scale(eps / dt);
    let div_phi_t = divergence(&dphi)?;
    let m = next.m.to_physical();
    let v = next.v.to_physical();
    let mut hv = vec![0.0; grid.dim() * n];
    for k in 0..n {
        let h = params.h(eps * m[k])?;
        for a in 0..grid.dim() {
            hv[a * n + k] = h * v[a * n + k];
        }
    }
    let div_hv = divergence(&SpectralField::from_physical(grid, grid.dim(), &hv)?)?;
    let mut res = div_phi_t.add(&div_hv);
    res.scale(1.0 / params.n_bar());
    res.axpy(1.0, &div_v);
    let scale = div_v.l2_norm();
    Ok(if scale == 0.0 { res.l2_norm() } else { res.l2_norm() / scale })
}

/// Per-snapshot diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub mass_mean: f64,
    pub l2_m: f64,
    pub l2_pv: f64,
    pub l2_qv: f64,
    pub l2_gradphi: f64,
    pub besov_sigma: f64,
    pub q_energy: f64,
    /// Mean removed from the Poisson source at this snapshot.
    pub poisson_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    MassMean,
    L2M,
    L2Pv,
    L2Qv,
    L2GradPhi,
    BesovSigma,
    QEnergy,
}

impl Diagnostics {
    pub fn compute(state: &ScaledState, params: &ModelParams, constants: &EnergyConstants, poisson_mean: f64) -> Result<Self> {
        let (pv, qv) = leray_project(&state.v)?;
        let sigma = BesovParams::critical(state.grid().dim());
        Ok(Self {
            t: state.time,
            mass_mean: mass_mean(state, params)?,
            l2_m: state.m.l2_norm(),
            l2_pv: pv.l2_norm(),
            l2_qv: qv.l2_norm(),
            l2_gradphi: state.grad_phi.l2_norm(),
            besov_sigma: besov_norm_tuple(&[&state.m, &state.v, &state.grad_phi], &sigma),
            q_energy: energy_q(state, constants, params)?,
            poisson_mean,
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::MassMean => self.mass_mean,
            Metric::L2M => self.l2_m,
            Metric::L2Pv => self.l2_pv,
            Metric::L2Qv => self.l2_qv,
            Metric::L2GradPhi => self.l2_gradphi,
            Metric::BesovSigma => self.besov_sigma,
            Metric::QEnergy => self.q_energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub diagnostics: Diagnostics,
    pub state: Option<ScaledState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub snapshots: Vec<Snapshot>,
    /// Largest Poisson-source mean removed over all steps.
    pub max_poisson_mean: f64,
}

pub const CSV_HEADER: [&str; 8] = ["t", "mass_mean", "L2_m", "L2_Pv", "L2_Qv", "L2_gradphi", "besov_sigma", "Q_energy"];

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.diagnostics.t).collect()
    }

    pub fn series(&self, metric: Metric) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.diagnostics.get(metric)).collect()
    }

    pub fn states(&self) -> impl Iterator<Item = &ScaledState> {
        self.snapshots.iter().filter_map(|s| s.state.as_ref())
    }

    pub fn final_state(&self) -> Option<&ScaledState> {
        self.snapshots.last().and_then(|s| s.state.as_ref())
    }

    pub fn decay_fit(&self, metric: Metric) -> Result<DecayFit> {
        decay_fit(&self.times(), &self.series(metric))
    }

    /// Largest `|mass_mean(t) - mass_mean(0)|`.
    pub fn mass_drift(&self) -> f64 {
        let m = self.series(Metric::MassMean);
        m.iter().map(|x| (x - m[0]).abs()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for s in &self.snapshots {
            let d = &s.diagnostics;
            w.write_record(
                [d.t, d.mass_mean, d.l2_m, d.l2_pv, d.l2_qv, d.l2_gradphi, d.besov_sigma, d.q_energy]
                    .iter()
                    .map(|x| format!("{x:e}")),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Integrates from `initial` to `config.t_end`.
pub fn solve(config: &SolverConfig, initial: &ScaledState) -> Result<Trajectory> {
    solve_observed(config, initial, |_, _| Ok(()))
}

/// As [`solve`], calling `observe` at every recorded snapshot.
pub fn solve_observed<F>(config: &SolverConfig, initial: &ScaledState, mut observe: F) -> Result<Trajectory>
where
    F: FnMut(&ScaledState, &Diagnostics) -> Result<()>,
{
    config.validate()?;
    if *initial.grid() != config.grid {
        return Err(Error::Config("initial state lives on a different grid than the configuration".into()));
    }
    if !initial.is_finite() {
        return Err(Error::Precondition("initial state has non-finite coefficients".into()));
    }
    let params = config.params;
    let constants = config.energy_constants()?;
    let integrator = EtdIntegrator::new(config.grid, &params, config.dt)?.with_dealias(config.dealias);
    let mut trajectory = Trajectory { config: *config, snapshots: Vec::new(), max_poisson_mean: 0.0 };

    let mut state = initial.clone();
    check_vacuum(&state, config)?;
    record(&mut trajectory, &state, &params, &constants, 0.0, &mut observe)?;

    let steps = config.steps();
    for step in 1..=steps {
        let (mut next, mean) = integrator.step_state(&state)?;
        next.time = initial.time + step as f64 * config.dt;
        if !next.is_finite() {
            return Err(Error::StepRejected { time: next.time, reason: "non-finite state".into(), extremum: f64::NAN });
        }
        check_vacuum(&next, config)?;
        trajectory.max_poisson_mean = trajectory.max_poisson_mean.max(mean.abs());
        state = next;
        if step % config.record_every == 0 || step == steps {
            let residual = poisson_residual(&state, &params)?;
            if residual > config.poisson_tol {
                return Err(Error::StepRejected {
                    time: state.time,
                    reason: format!("Poisson residual {residual:e} above tolerance"),
                    extremum: residual,
                });
            }
            record(&mut trajectory, &state, &params, &constants, mean, &mut observe)?;
        }
    }
    if let Some(last) = trajectory.snapshots.last_mut() {
        last.state.get_or_insert(state);
    }
    Ok(trajectory)
}

fn record<F>(
    trajectory: &mut Trajectory,
    state: &ScaledState,
    params: &ModelParams,
    constants: &EnergyConstants,
    poisson_mean: f64,
    observe: &mut F,
) -> Result<()>
where
    F: FnMut(&ScaledState, &Diagnostics) -> Result<()>,
{
    let d = Diagnostics::compute(state, params, constants, poisson_mean)?;
    observe(state, &d)?;
    let keep = trajectory.config.keep_states;
    trajectory.snapshots.push(Snapshot { diagnostics: d, state: keep.then(|| state.clone()) });
    Ok(())
}

fn check_vacuum(state: &ScaledState, config: &SolverConfig) -> Result<()> {
    let ratio = state.vacuum_ratio(&config.params);
    if ratio < config.vacuum_margin {
        return Err(Error::StepRejected {
            time: state.time,
            reason: format!("approaching vacuum: (gamma-1)/2 eps m + psi_bar at {ratio:.3} psi_bar"),
            extremum: ratio,
        });
    }
    Ok(())
}

/// Writes a snapshot: header `(N, M)` as little-endian `u64`, then
/// `(L, γ, A, n̄, ε, t)` as little-endian `f64`, then the coefficient pairs
/// of `m`, `v` and `∇φ` in storage order.
pub fn write_snapshot<W: Write>(mut out: W, state: &ScaledState, params: &ModelParams) -> Result<()> {
    let grid = state.grid();
    out.write_all(&(grid.dim() as u64).to_le_bytes())?;
    out.write_all(&(grid.points() as u64).to_le_bytes())?;
    for x in [grid.length(), params.gamma(), params.a(), params.n_bar(), params.epsilon(), state.time] {
        out.write_all(&x.to_le_bytes())?;
    }
    for field in [&state.m, &state.v, &state.grad_phi] {
        for c in field.coefficients() {
            out.write_all(&c.re.to_le_bytes())?;
            out.write_all(&c.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<(ScaledState, ModelParams)> {
    let mut u = [0u8; 8];
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut u)?;
        Ok(u64::from_le_bytes(u))
    };
    let dim = next_u64(&mut input)? as usize;
    let points = next_u64(&mut input)? as usize;
    let mut f = [0u8; 8];
    let mut next_f64 = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut f)?;
        Ok(f64::from_le_bytes(f))
    };
    let length = next_f64(&mut input)?;
    let gamma = next_f64(&mut input)?;
    let a = next_f64(&mut input)?;
    let n_bar = next_f64(&mut input)?;
    let eps = next_f64(&mut input)?;
    let time = next_f64(&mut input)?;
    let grid = TorusGrid::new(dim, points, length)?;
    let params = ModelParams::new(gamma, a, n_bar, eps)?;
    let mut read_field = |components: usize| -> Result<SpectralField> {
        let mut coeffs = Vec::with_capacity(components * grid.len());
        for _ in 0..components * grid.len() {
            let re = next_f64(&mut input)?;
            let im = next_f64(&mut input)?;
            coeffs.push(Complex64::new(re, im));
        }
        SpectralField::from_coefficients(grid, components, coeffs)
    };
    let m = read_field(1)?;
    let v = read_field(dim)?;
    let grad_phi = read_field(dim)?;
    Ok((ScaledState { m, v, grad_phi, time }, params))
}
