//! Library-callable acceptance checks with a pass/fail outcome and a short
//! measurement summary each.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acoustic::{
    acoustic_symbol, dispersive_bound, dispersive_sup, free_acoustic_norm, AcousticVars, DispersiveArgs, Kernel,
    ModeTable, QuadratureOptions,
};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::limit::{metric_acoustic, metric_field, run_sweep_with_runs, ConvergenceReport, SweepConfig, METRIC_PV_SUP};
use crate::littlewood_paley::{block, homogeneous_block, DyadicPartition};
use crate::oracle::taylor_linear_ode;
use crate::plasma::{build_ill_prepared_with, kawashima_product_check, nonlinear_parts, ModelParams, ScaledState};
use crate::solver::{solve, solve_observed, Diagnostics, Metric, SolverConfig, Trajectory};
use crate::spectral::random::{random_field, rng};
use crate::spectral::{divergence, leray_project, SpectralField, TorusGrid};

/// Result of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// Runs `f`, timing it and turning an error into a failed outcome.
pub fn guarded<F>(id: u32, name: &str, f: F) -> CheckOutcome
where
    F: FnOnce() -> Result<(bool, String)>,
{
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckOutcome { id, name: name.to_string(), passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn sup_norm(f: &SpectralField) -> f64 {
    f.to_physical().iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Localized smooth data: a centred Gaussian density perturbation (mean
/// removed) and a velocity made of two offset Gaussians. Both are scaled so
/// that the scaled data `(m₀, v₀)` have sup norm close to `amplitude`.
pub fn gaussian_data(grid: TorusGrid, width: f64, amplitude: f64, params: &ModelParams) -> (SpectralField, SpectralField) {
    let c = grid.length() / 2.0;
    let g = |x: &[f64; 3], dx: f64, dy: f64| {
        (-((x[0] - c - dx).powi(2) + (x[1] - c - dy).powi(2)) / (2.0 * width * width)).exp()
    };
    let mut n01 = SpectralField::from_fn(grid, 1, |x, _| g(x, 0.0, 0.0));
    n01.component_mut(0)[0] = Complex64::new(0.0, 0.0);
    let mut v0 = SpectralField::from_fn(grid, 2, |x, c| if c == 0 { g(x, 1.0, 0.5) } else { -0.7 * g(x, -0.5, 1.0) });
    let sn = sup_norm(&n01);
    let sv = sup_norm(&v0);
    n01.scale(amplitude / sn * params.n_bar() / params.psi_bar());
    v0.scale(amplitude / sv);
    (n01, v0)
}

fn log_uniform<R: Rng>(r: &mut R, lo: f64, hi: f64) -> f64 {
    (r.gen_range(lo.ln()..hi.ln())).exp()
}

pub fn partition_of_unity(seed: u64) -> CheckOutcome {
    guarded(1, "partition of unity", || {
        let mut r = rng(seed);
        let mut worst = 0.0f64;
        for partition in [DyadicPartition::default(), DyadicPartition::alternate()] {
            for _ in 0..10_000 {
                let rho = log_uniform(&mut r, 1e-3, 1e4);
                let angle = r.gen_range(0.0..2.0 * PI);
                let norm = (rho * angle.cos()).hypot(rho * angle.sin());
                let mut sum = partition.chi(norm);
                for q in 0..64 {
                    sum += partition.phi(norm * 2f64.powi(-q));
                }
                worst = worst.max((sum - 1.0).abs());
            }
        }
        Ok((worst <= 1e-12, format!("max |chi + sum phi - 1| = {worst:.2e} over 2 x 10^4 frequencies")))
    })
}

pub fn almost_orthogonality(seed: u64) -> CheckOutcome {
    guarded(2, "almost orthogonality", || {
        let grid = TorusGrid::new(2, 128, 2.0 * PI)?;
        let partition = DyadicPartition::default();
        let top = partition.top_block(&grid);
        let mut r = rng(seed);
        let mut worst = 0.0f64;
        let mut pairs = 0;
        for _ in 0..20 {
            let f = random_field(grid, 1, &mut r, 63, 0.0, false);
            let blocks: Vec<SpectralField> = (-1..=top).map(|q| block(&f, &partition, q)).collect::<Result<_>>()?;
            for q in -1..=top {
                for p in (q + 2)..=top {
                    let pq = block(&blocks[(q + 1) as usize], &partition, p)?;
                    worst = worst.max(pq.l2_norm() / f.l2_norm());
                    pairs += 1;
                }
            }
        }
        Ok((worst <= 1e-12, format!("max |D_p D_q f|/|f| = {worst:.2e} over {pairs} pairs")))
    })
}

pub fn leray_projection(seed: u64) -> CheckOutcome {
    guarded(3, "Leray projection", || {
        let grid = TorusGrid::new(2, 128, 2.0 * PI)?;
        let mut r = rng(seed);
        let (mut div_worst, mut pq_worst) = (0.0f64, 0.0f64);
        for _ in 0..100 {
            let v = random_field(grid, 2, &mut r, 63, 0.5, false);
            let (p, q) = leray_project(&v)?;
            let n = v.l2_norm();
            div_worst = div_worst.max(divergence(&p)?.l2_norm() / n);
            pq_worst = pq_worst.max(leray_project(&q)?.0.l2_norm() / n);
        }
        Ok((
            div_worst <= 1e-13 && pq_worst <= 1e-13,
            format!("max |div Pv|/|v| = {div_worst:.2e}, max |PQv|/|v| = {pq_worst:.2e} over 100 fields"),
        ))
    })
}

pub fn kawashima_identity(seed: u64) -> CheckOutcome {
    guarded(4, "Kawashima identity", || {
        let mut r = rng(seed);
        let base = ModelParams::default();
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let eps = log_uniform(&mut r, 0.01, 1.0);
            let params = base.with_epsilon(eps)?;
            let rho = log_uniform(&mut r, 0.25, 64.0);
            let angle = r.gen_range(0.0..2.0 * PI);
            let xi = [rho * angle.cos(), rho * angle.sin()];
            let scale = params.psi_bar() * rho / eps;
            worst = worst.max(kawashima_product_check(&xi, &params)? / scale.max(1.0));
        }
        Ok((worst <= 1e-13, format!("max relative product residual = {worst:.2e} over 1000 (xi, eps)")))
    })
}

pub fn semigroup_exactness() -> CheckOutcome {
    guarded(5, "semigroup exactness", || {
        let base = ModelParams::default();
        let mut worst = 0.0f64;
        let mut slope_dev = 0.0f64;
        for eps in [1.0, 0.1, 0.01] {
            let params = base.with_epsilon(eps)?;
            for e in -2..=6 {
                let s = acoustic_symbol(2f64.powi(e), &params)?;
                let a = s.matrix();
                let flat = [a.0[0][0], a.0[0][1], a.0[1][0], a.0[1][1]];
                for t in [0.1, 1.0, 10.0] {
                    let prop = s.propagator(t);
                    for col in 0..2 {
                        let mut u0 = [Complex64::new(0.0, 0.0); 2];
                        u0[col] = Complex64::new(1.0, 0.0);
                        let u = taylor_linear_ode(&flat, 2, &u0, t, 1e-15);
                        let err = ((u[0] - prop.0[0][col]).norm_sqr() + (u[1] - prop.0[1][col]).norm_sqr()).sqrt();
                        let size = (prop.0[0][col].norm_sqr() + prop.0[1][col].norm_sqr()).sqrt();
                        worst = worst.max(err / size);
                    }
                }
                let times: Vec<f64> = (0..=1600).map(|i| i as f64 * 0.25).collect();
                let logs: Vec<f64> = times.iter().map(|&t| s.propagator(t).norm().ln()).collect();
                let fit = linear_fit(&times, &logs)?;
                slope_dev = slope_dev.max((fit.slope + 0.5).abs());
            }
        }
        Ok((
            worst <= 1e-8 && slope_dev <= 0.01,
            format!("max relative error vs Taylor oracle = {worst:.2e}, max |decay slope + 1/2| = {slope_dev:.2e}"),
        ))
    })
}

/// Grid and data of the small-amplitude solver runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRegimeSettings {
    pub grid: TorusGrid,
    pub width: f64,
    pub amplitude: f64,
    pub dt: f64,
    /// Window of the comparison with the exact propagator.
    pub compare_until: f64,
    /// Length of the run (mass drift is measured over the whole run).
    pub t_end: f64,
    pub record_interval: f64,
}

impl Default for LinearRegimeSettings {
    fn default() -> Self {
        Self {
            grid: TorusGrid::new(2, 128, 2.0 * PI * 16.0).expect("valid grid"),
            width: 3.0,
            amplitude: 1e-6,
            dt: 0.05,
            compare_until: 5.0,
            t_end: 10.0,
            record_interval: 0.5,
        }
    }
}

fn without_mean(f: &SpectralField) -> SpectralField {
    let mut g = f.clone();
    g.component_mut(0)[0] = Complex64::new(0.0, 0.0);
    g
}

/// Maximal relative deviation from the linear propagator on the comparison
/// window, and the mass drift of the whole run.
pub fn linear_regime_run(settings: &LinearRegimeSettings, epsilon: f64) -> Result<(f64, f64)> {
    let params = ModelParams::default().with_epsilon(epsilon)?;
    let (n01, v0) = gaussian_data(settings.grid, settings.width, settings.amplitude, &params);
    let initial = build_ill_prepared_with(&n01, &v0, &params, 1.0)?;
    let mut reference = initial.clone();
    reference.m = without_mean(&initial.m);
    let mut cfg = SolverConfig::new(params, settings.grid, settings.dt, settings.t_end);
    cfg.record_every = (settings.record_interval / settings.dt).round().max(1.0) as usize;
    let mut worst = 0.0f64;
    let traj = solve_observed(&cfg, &initial, |state, _| {
        if state.time > settings.compare_until + 1e-9 {
            return Ok(());
        }
        let exact = crate::acoustic::apply_linear_propagator(&reference, state.time, &params)?;
        let dm = without_mean(&state.m).sub(&exact.m).l2_norm();
        let dv = state.v.sub(&exact.v).l2_norm();
        let size = exact.m.l2_norm().hypot(exact.v.l2_norm());
        worst = worst.max(dm.hypot(dv) / size);
        Ok(())
    })?;
    Ok((worst, traj.mass_drift()))
}

/// Observed temporal order from three runs at `dt`, `dt/2`, `dt/4`.
pub fn self_convergence_order(
    grid: TorusGrid,
    width: f64,
    amplitude: f64,
    epsilon: f64,
    dt: f64,
    t_end: f64,
) -> Result<f64> {
    let params = ModelParams::default().with_epsilon(epsilon)?;
    let (n01, v0) = gaussian_data(grid, width, amplitude, &params);
    let initial = build_ill_prepared_with(&n01, &v0, &params, 1.0)?;
    let run = |h: f64| -> Result<ScaledState> {
        let mut cfg = SolverConfig::new(params, grid, h, t_end);
        cfg.record_every = usize::MAX;
        let t = solve(&cfg, &initial)?;
        t.final_state().cloned().ok_or_else(|| Error::Config("no final state".into()))
    };
    let (a, b, c) = (run(dt)?, run(dt / 2.0)?, run(dt / 4.0)?);
    let diff = |x: &ScaledState, y: &ScaledState| x.m.sub(&y.m).l2_norm().hypot(x.v.sub(&y.v).l2_norm());
    Ok((diff(&a, &b) / diff(&b, &c)).log2())
}

/// Solver checks: linear-regime oracle with self-convergence, and mass
/// conservation.
pub fn solver_checks(settings: &LinearRegimeSettings) -> Vec<CheckOutcome> {
    let mut drifts = Vec::new();
    let linear = guarded(6, "linear-regime oracle", || {
        let mut detail = Vec::new();
        let mut ok = true;
        for eps in [0.1, 0.01] {
            let (dev, drift) = linear_regime_run(settings, eps)?;
            drifts.push((eps, settings.amplitude, drift));
            ok &= dev <= 1e-7;
            detail.push(format!("eps {eps}: max rel. deviation {dev:.2e}"));
        }
        for eps in [1.0, 0.1] {
            let order = self_convergence_order(settings.grid, settings.width, 0.05, eps, 0.04, 1.0)?;
            ok &= (order - 2.0).abs() <= 0.2;
            detail.push(format!("eps {eps}: order {order:.3}"));
        }
        Ok((ok, detail.join("; ")))
    });
    let mass = guarded(7, "mass conservation", || {
        let params = ModelParams::default().with_epsilon(0.1)?;
        let (n01, v0) = gaussian_data(settings.grid, settings.width, 0.05, &params);
        let initial = build_ill_prepared_with(&n01, &v0, &params, 1.0)?;
        let mut cfg = SolverConfig::new(params, settings.grid, 0.01, settings.t_end);
        cfg.record_every = 50;
        cfg.keep_states = false;
        drifts.push((0.1, 0.05, solve(&cfg, &initial)?.mass_drift()));
        if drifts.len() < 3 {
            return Err(Error::Config("linear-regime runs did not complete".into()));
        }
        let worst = drifts.iter().map(|d| d.2).fold(0.0f64, f64::max);
        let detail = drifts
            .iter()
            .map(|(e, a, d)| format!("eps {e} amp {a:e}: {d:.2e}"))
            .collect::<Vec<_>>()
            .join("; ");
        Ok((worst <= 1e-9, format!("drift over {} time units: {detail}", settings.t_end)))
    });
    vec![linear, mass]
}

/// Small-data decay runs.
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySettings {
    pub base: ModelParams,
    pub grid: TorusGrid,
    pub epsilons: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
    pub t_end: f64,
    pub dt_max: f64,
    pub dt_per_epsilon: f64,
    pub record_interval: f64,
}

impl Default for DecaySettings {
    fn default() -> Self {
        Self {
            base: ModelParams::default(),
            grid: TorusGrid::new(2, 128, 2.0 * PI * 8.0).expect("valid grid"),
            epsilons: vec![1.0, 0.1, 0.01],
            width: 1.5,
            amplitude: 0.05,
            t_end: 10.0,
            dt_max: 0.05,
            dt_per_epsilon: 0.5,
            record_interval: 0.1,
        }
    }
}

impl DecaySettings {
    /// Time step dividing `record_interval`.
    pub fn step_for(&self, epsilon: f64) -> (f64, usize) {
        let target = self.dt_max.min(self.dt_per_epsilon * epsilon);
        let per = (self.record_interval / target).ceil().max(1.0) as usize;
        (self.record_interval / per as f64, per)
    }
}

pub fn decay_runs(settings: &DecaySettings) -> Result<Vec<(f64, Trajectory)>> {
    settings
        .epsilons
        .par_iter()
        .map(|&eps| {
            let params = settings.base.with_epsilon(eps)?;
            let (n01, v0) = gaussian_data(settings.grid, settings.width, settings.amplitude, &params);
            let initial = build_ill_prepared_with(&n01, &v0, &params, 1.0)?;
            let (dt, per) = settings.step_for(eps);
            let mut cfg = SolverConfig::new(params, settings.grid, dt, settings.t_end);
            cfg.record_every = per;
            cfg.keep_states = false;
            Ok((eps, solve(&cfg, &initial)?))
        })
        .collect()
}

/// Judges decay runs: all rates negative, within a factor 3, `r² ≥ 0.95`.
pub fn judge_decay(runs: &[(f64, Trajectory)]) -> Result<(bool, String)> {
    let mut ok = true;
    let mut rates = Vec::new();
    let mut detail = Vec::new();
    for (eps, t) in runs {
        let fit = t.decay_fit(Metric::BesovSigma)?;
        ok &= fit.rate < 0.0 && fit.r2 >= 0.95;
        rates.push(fit.rate);
        detail.push(format!("eps {eps}: rate {:.4} r2 {:.4}", fit.rate, fit.r2));
    }
    let (lo, hi) = rates.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.abs()), hi.max(r.abs())));
    ok &= !rates.is_empty() && hi <= 3.0 * lo;
    detail.push(format!("rate spread {:.3}", hi / lo));
    Ok((ok, detail.join("; ")))
}

pub fn uniform_decay(settings: &DecaySettings) -> CheckOutcome {
    guarded(8, "uniform exponential decay", || judge_decay(&decay_runs(settings)?))
}

/// Largest `max(Q/B, B/Q)` over random small states.
pub fn energy_equivalence(seed: u64) -> CheckOutcome {
    guarded(9, "energy equivalence", || {
        let grid = TorusGrid::new(2, 32, 2.0 * PI * 4.0)?;
        let mut r = rng(seed);
        let mut worst = 1.0f64;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for eps in [1.0, 0.1, 0.01] {
            let params = ModelParams::default().with_epsilon(eps)?;
            let constants = SolverConfig::new(params, grid, 0.05, 1.0).energy_constants()?;
            for _ in 0..50 {
                let decay = r.gen_range(0.5..3.0);
                let mut n01 = random_field(grid, 1, &mut r, 12, decay, true);
                let mut v0 = random_field(grid, 2, &mut r, 12, decay, true);
                let amp = log_uniform(&mut r, 1e-3, 0.05);
                n01.scale(amp / sup_norm(&n01));
                v0.scale(amp * r.gen_range(0.1..1.0) / sup_norm(&v0));
                let state = build_ill_prepared_with(&n01, &v0, &params, 1.0)?;
                let d = Diagnostics::compute(&state, &params, &constants, 0.0)?;
                let ratio = d.q_energy / d.besov_sigma;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
                worst = worst.max(ratio.max(1.0 / ratio));
            }
        }
        Ok((worst <= 20.0, format!("Q/B in [{lo:.3}, {hi:.3}], C* = {worst:.3} over 150 states")))
    })
}

/// Grid of the dispersive-bound measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersiveSettings {
    pub epsilon: f64,
    pub ks: Vec<i32>,
    pub taus: Vec<f64>,
    pub ts: Vec<f64>,
}

impl Default for DispersiveSettings {
    fn default() -> Self {
        Self { epsilon: 0.1, ks: vec![0, 1, 2], taus: vec![1.0, 4.0, 16.0, 64.0], ts: vec![0.0, 1.0, 2.0] }
    }
}

/// One measured supremum next to its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersiveSample {
    pub kernel: usize,
    pub k: i32,
    pub t: f64,
    pub tau: f64,
    pub rho: f64,
    pub measured: f64,
    pub bound: f64,
}

pub fn dispersive_samples(settings: &DispersiveSettings) -> Result<Vec<DispersiveSample>> {
    let params = ModelParams::default().with_epsilon(settings.epsilon)?;
    let mut jobs = Vec::new();
    for kernel in Kernel::ALL {
        for &k in &settings.ks {
            for &t in &settings.ts {
                for &tau in &settings.taus {
                    jobs.push((kernel, k, t, tau));
                }
            }
        }
    }
    let opts = QuadratureOptions::default();
    jobs.par_iter()
        .map(|&(kernel, k, t, tau)| {
            let peak = dispersive_sup(DispersiveArgs { kernel, k, t, tau }, &params, &opts)?;
            Ok(DispersiveSample {
                kernel: kernel.index(),
                k,
                t,
                tau,
                rho: peak.rho,
                measured: peak.modulus,
                bound: dispersive_bound(kernel, k, t, tau, settings.epsilon),
            })
        })
        .collect()
}

/// Per kernel: `C_fit = max measured/bound`, the spread over `(k, t)` of
/// the per-`(k, t)` constants, and the `τ`-envelope ratios.
pub fn judge_dispersive(samples: &[DispersiveSample]) -> (bool, String) {
    let mut ok = true;
    let mut detail = Vec::new();
    let mut kernels: Vec<usize> = samples.iter().map(|s| s.kernel).collect();
    kernels.sort_unstable();
    kernels.dedup();
    for j in kernels {
        let own: Vec<&DispersiveSample> = samples.iter().filter(|s| s.kernel == j).collect();
        let mut groups: Vec<(i32, f64)> = own.iter().map(|s| (s.k, s.t)).collect();
        groups.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        groups.dedup();
        let mut constants = Vec::new();
        let mut envelope = f64::INFINITY;
        for (k, t) in groups {
            let mut row: Vec<&&DispersiveSample> = own.iter().filter(|s| s.k == k && s.t == t).collect();
            row.sort_by(|a, b| a.tau.total_cmp(&b.tau));
            constants.push(row.iter().map(|s| s.measured / s.bound).fold(0.0f64, f64::max));
            for w in row.windows(2) {
                if w[0].tau >= 4.0 && (w[1].tau / w[0].tau - 4.0).abs() < 1e-12 {
                    envelope = envelope.min(w[0].measured / w[1].measured);
                }
            }
        }
        let c_fit = constants.iter().copied().fold(0.0f64, f64::max);
        let spread = c_fit / constants.iter().copied().fold(f64::INFINITY, f64::min);
        let good = spread <= 3.0 && envelope >= 1.4;
        ok &= good;
        detail.push(format!("j={j}: C_fit {c_fit:.2}, spread {spread:.2}, min envelope {envelope:.2}"));
    }
    (ok, detail.join("; "))
}

pub fn dispersive_bound_check(settings: &DispersiveSettings) -> CheckOutcome {
    guarded(10, "dispersive bound", || Ok(judge_dispersive(&dispersive_samples(settings)?)))
}

/// Band-limited free acoustic runs.
#[derive(Debug, Clone, PartialEq)]
pub struct StrichartzSettings {
    pub grid: TorusGrid,
    pub epsilons: Vec<f64>,
    pub width: f64,
    /// Homogeneous dyadic blocks the data is localized to.
    pub blocks: Vec<i32>,
    pub t_end: f64,
    pub dt_per_epsilon: f64,
}

impl Default for StrichartzSettings {
    fn default() -> Self {
        Self {
            grid: TorusGrid::new(2, 128, 2.0 * PI * 16.0).expect("valid grid"),
            epsilons: vec![0.1, 0.05, 0.025, 0.0125],
            width: 1.0,
            blocks: vec![0, 1],
            t_end: 4.0,
            dt_per_epsilon: 0.1,
        }
    }
}

/// `(block, ε, ‖U^ε‖_{L¹_tL^∞}/(ε^{1/4}‖U₀‖_{L²}))` for every run.
pub fn strichartz_ratios(settings: &StrichartzSettings) -> Result<Vec<(i32, f64, f64)>> {
    let grid = settings.grid;
    let c = grid.length() / 2.0;
    let w = settings.width;
    let g = SpectralField::from_fn(grid, 1, |x, _| (-((x[0] - c).powi(2) + (x[1] - c).powi(2)) / (2.0 * w * w)).exp());
    let mut jobs = Vec::new();
    for &k in &settings.blocks {
        for &eps in &settings.epsilons {
            jobs.push((k, eps));
        }
    }
    jobs.par_iter()
        .map(|&(k, eps)| {
            let m0 = homogeneous_block(&g, &DyadicPartition::default(), k);
            let u0 = AcousticVars::from_mv(&m0, &SpectralField::zeros(grid, grid.dim()))?;
            let params = ModelParams::default().with_epsilon(eps)?;
            let table = ModeTable::new(grid, &params)?;
            let steps = (settings.t_end / (settings.dt_per_epsilon * eps)).ceil() as usize;
            let dt = settings.t_end / steps as f64;
            let norm = free_acoustic_norm(&table, &u0, dt, steps, f64::INFINITY)?;
            Ok((k, eps, norm / (eps.powf(0.25) * u0.l2_norm())))
        })
        .collect()
}

pub fn judge_strichartz(ratios: &[(i32, f64, f64)]) -> (bool, String) {
    let mut blocks: Vec<i32> = ratios.iter().map(|r| r.0).collect();
    blocks.dedup();
    let mut ok = true;
    let mut detail = Vec::new();
    for k in blocks {
        let vals: Vec<f64> = ratios.iter().filter(|r| r.0 == k).map(|r| r.2).collect();
        let hi = vals.iter().copied().fold(0.0f64, f64::max);
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        ok &= hi <= 2.0 * lo;
        let list = vals.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ");
        detail.push(format!("block {k}: ratios [{list}], spread {:.2}", hi / lo));
    }
    (ok, detail.join("; "))
}

pub fn strichartz_scaling(settings: &StrichartzSettings) -> CheckOutcome {
    guarded(11, "Strichartz eps-scaling", || Ok(judge_strichartz(&strichartz_ratios(settings)?)))
}

/// Ill-prepared sweep and its base data.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSettings {
    pub sweep: SweepConfig,
    pub width: f64,
    pub amplitude: f64,
}

impl Default for LimitSettings {
    fn default() -> Self {
        Self {
            sweep: SweepConfig {
                base: ModelParams::default(),
                grid: TorusGrid::new(2, 128, 2.0 * PI * 8.0).expect("valid grid"),
                epsilons: vec![0.2, 0.1, 0.05, 0.025],
                t_end: 4.0,
                snapshot_dt: 0.02,
                dt_max: 0.02,
                dt_per_epsilon: 0.1,
                besov_p: vec![2.0, f64::INFINITY],
                smallness: 1.0,
            },
            width: 1.5,
            amplitude: 0.05,
        }
    }
}

pub fn limit_runs(settings: &LimitSettings) -> Result<(ConvergenceReport, Vec<(f64, Trajectory)>)> {
    let (n01, v0) = gaussian_data(settings.sweep.grid, settings.width, settings.amplitude, &settings.sweep.base);
    run_sweep_with_runs(&n01, &v0, &settings.sweep)
}

/// `sup_t‖Pv^ε − u‖` strictly decreasing with slope ≥ 0.2 and `r² ≥ 0.9`;
/// the `p = ∞` acoustic and field metrics decreasing with positive slope.
pub fn judge_limit(report: &ConvergenceReport) -> (bool, String) {
    if !report.complete {
        return (false, format!("incomplete sweep: {:?}", report.failures));
    }
    let mut ok = true;
    let mut detail = Vec::new();
    let names = [METRIC_PV_SUP.to_string(), metric_acoustic(f64::INFINITY), metric_field(f64::INFINITY)];
    for (i, name) in names.iter().enumerate() {
        let Some(m) = report.metric(name) else {
            ok = false;
            detail.push(format!("{name}: missing"));
            continue;
        };
        let slope = m.slope.unwrap_or(f64::NAN);
        let r2 = m.r2.unwrap_or(f64::NAN);
        let good = if i == 0 {
            m.strictly_decreasing() && slope >= 0.2 && r2 >= 0.9
        } else {
            m.strictly_decreasing() && slope > 0.0
        };
        ok &= good;
        detail.push(format!("{name}: slope {slope:.3} r2 {r2:.3}{}", if m.strictly_decreasing() { "" } else { " (not decreasing)" }));
    }
    (ok, detail.join("; "))
}

pub fn zero_mass_limit(settings: &LimitSettings) -> CheckOutcome {
    guarded(12, "zero-electron-mass convergence", || Ok(judge_limit(&limit_runs(settings)?.0)))
}

/// Poisson correction at `γ = 3, A = 1/3, n̄ = 1` along a short nonlinear run.
pub fn degenerate_coupling(seed: u64) -> CheckOutcome {
    guarded(13, "degenerate coupling", || {
        let grid = TorusGrid::new(2, 64, 2.0 * PI * 4.0)?;
        let mut r = rng(seed);
        let mut worst = 0.0f64;
        let mut evaluated = 0;
        for eps in [1.0, 0.1, 0.01] {
            let params = ModelParams::new(3.0, 1.0 / 3.0, 1.0, eps)?;
            let mut n01 = random_field(grid, 1, &mut r, 8, 2.0, true);
            let mut v0 = random_field(grid, 2, &mut r, 8, 2.0, true);
            n01.scale(0.1 / sup_norm(&n01));
            v0.scale(0.1 / sup_norm(&v0));
            let initial = build_ill_prepared_with(&n01, &v0, &params, 1.0)?;
            let mut cfg = SolverConfig::new(params, grid, 0.01 * eps.max(0.1), 0.2 * eps.max(0.1));
            cfg.record_every = 2;
            solve_observed(&cfg, &initial, |state, _| {
                let parts = nonlinear_parts(state, &params)?;
                worst = worst.max(parts.poisson_correction.max_coefficient());
                evaluated += 1;
                Ok(())
            })?;
        }
        Ok((worst <= 1e-13, format!("max |correction coefficient| = {worst:.2e} over {evaluated} states")))
    })
}

/// Checks that finish within seconds.
pub fn fast_checks(seed: u64) -> Vec<CheckOutcome> {
    vec![
        partition_of_unity(seed),
        almost_orthogonality(seed),
        leray_projection(seed),
        kawashima_identity(seed),
        semigroup_exactness(),
        energy_equivalence(seed),
        degenerate_coupling(seed),
    ]
}
