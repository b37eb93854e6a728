//! Incompressible Euler with damping and the `ε → 0` convergence harness.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{rate_fit, LinearFit};
use crate::littlewood_paley::{besov_norm, besov_norm_tuple, BesovParams, Summation};
use crate::plasma::{build_ill_prepared_with, ModelParams};
use crate::solver::{solve_observed, SolverConfig, Trajectory};
use crate::spectral::{dealias, gradient, leray_project, SpectralField, TorusGrid};

/// Divergence-free velocity at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitState {
    pub u: SpectralField,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub dealias: bool,
    /// Switch off `P(u·∇u)` (pure damping).
    pub advection: bool,
    /// Upper bound on `‖u₀‖_{B^σ_{2,1}}`, if any.
    pub smallness: Option<f64>,
}

impl LimitConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, record_every: 1, dealias: true, advection: true, smallness: None }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// `-P(u·∇u)`
fn advection(u: &SpectralField, dealiased: bool) -> Result<SpectralField> {
    let grid = *u.grid();
    let n = grid.len();
    let dim = grid.dim();
    let samples = u.to_physical();
    let grads = (0..dim).map(|a| gradient(&u.extract(a)).map(|g| g.to_physical())).collect::<Result<Vec<_>>>()?;
    let mut out = vec![0.0; dim * n];
    for a in 0..dim {
        for k in 0..n {
            let mut s = 0.0;
            for b in 0..dim {
                s += samples[b * n + k] * grads[a][b * n + k];
            }
            out[a * n + k] = -s;
        }
    }
    let mut f = SpectralField::from_physical(grid, dim, &out)?;
    if dealiased {
        f = dealias(&f);
    }
    Ok(leray_project(&f)?.0)
}

/// `u_t + P(u·∇u) + u = 0` by an integrating factor on the damping and
/// Heun's method on the projected advection; `u` is re-projected every step.
pub fn limit_solve(u0: &SpectralField, config: &LimitConfig) -> Result<Vec<LimitState>> {
    if !(config.dt > 0.0 && config.t_end > 0.0) || config.record_every == 0 {
        return Err(Error::Config(format!(
            "limit solve needs dt, t_end > 0 and record_every >= 1, got {config:?}"
        )));
    }
    if (config.steps() as f64 * config.dt - config.t_end).abs() > 1e-9 * config.t_end {
        return Err(Error::Config(format!("t_end = {} is not a multiple of dt = {}", config.t_end, config.dt)));
    }
    let grid = *u0.grid();
    if u0.components() != grid.dim() {
        return Err(Error::Config("limit velocity must be an N-vector".into()));
    }
    let (p, q) = leray_project(u0)?;
    let norm = u0.l2_norm();
    if q.l2_norm() > 1e-12 * norm {
        return Err(Error::Precondition(format!(
            "initial velocity is not divergence-free: |Qu0|/|u0| = {:e}",
            q.l2_norm() / norm
        )));
    }
    if let Some(delta) = config.smallness {
        let b = besov_norm(u0, &BesovParams::critical(grid.dim()));
        if b > delta {
            return Err(Error::Precondition(format!("initial velocity too large: Besov norm {b:e} > {delta:e}")));
        }
    }
    let h = config.dt;
    let decay = (-h).exp();
    let mut u = p;
    let mut out = vec![LimitState { u: u.clone(), time: 0.0 }];
    let steps = config.steps();
    for step in 1..=steps {
        if config.advection {
            let n0 = advection(&u, config.dealias)?;
            let mut stage = u.add(&n0.scaled(h));
            stage.scale(decay);
            let n1 = advection(&stage, config.dealias)?;
            let mut next = u.scaled(decay);
            next.axpy(0.5 * h * decay, &n0);
            next.axpy(0.5 * h, &n1);
            u = leray_project(&next)?.0;
        } else {
            u.scale(decay);
        }
        if !u.is_finite() {
            return Err(Error::StepRejected { time: step as f64 * h, reason: "non-finite limit velocity".into(), extremum: f64::NAN });
        }
        if step % config.record_every == 0 || step == steps {
            out.push(LimitState { u: u.clone(), time: step as f64 * h });
        }
    }
    Ok(out)
}

/// Setup of an `ε`-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: ModelParams,
    pub grid: TorusGrid,
    pub epsilons: Vec<f64>,
    pub t_end: f64,
    /// Interval of the shared snapshot schedule.
    pub snapshot_dt: f64,
    /// Time step of each run is `min(dt_max, dt_per_epsilon·ε)`, adjusted
    /// to divide `snapshot_dt`.
    pub dt_max: f64,
    pub dt_per_epsilon: f64,
    /// Integrability exponents of the Besov error metrics.
    pub besov_p: Vec<f64>,
    pub smallness: f64,
}

impl SweepConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.epsilons.is_empty() {
            out.push("sweep needs at least one epsilon".into());
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            out.push(format!("epsilon list must be strictly decreasing, got {:?}", self.epsilons));
        }
        for &e in &self.epsilons {
            if !(e > 0.0 && e <= 1.0) {
                out.push(format!("epsilon must lie in (0, 1], got {e}"));
            }
        }
        if !(self.snapshot_dt > 0.0 && self.t_end > 0.0) {
            out.push(format!("snapshot_dt and t_end must be positive, got {} and {}", self.snapshot_dt, self.t_end));
        } else if ((self.t_end / self.snapshot_dt).round() * self.snapshot_dt - self.t_end).abs() > 1e-9 * self.t_end {
            out.push(format!("t_end = {} is not a multiple of snapshot_dt = {}", self.t_end, self.snapshot_dt));
        }
        if !(self.dt_max > 0.0 && self.dt_max <= 0.1) {
            out.push(format!("dt_max must lie in (0, 0.1], got {}", self.dt_max));
        }
        if !(self.dt_per_epsilon > 0.0) {
            out.push(format!("dt_per_epsilon must be positive, got {}", self.dt_per_epsilon));
        }
        for &p in &self.besov_p {
            if !(p >= 2.0) {
                out.push(format!("Besov exponent p must be >= 2, got {p}"));
            }
        }
        out
    }

    /// `(dt, steps per snapshot)` for one `ε`.
    pub fn step_for(&self, epsilon: f64) -> (f64, usize) {
        let target = self.dt_max.min(self.dt_per_epsilon * epsilon);
        let per = (self.snapshot_dt / target).ceil().max(1.0) as usize;
        (self.snapshot_dt / per as f64, per)
    }
}

/// Values of one error metric across the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub values: Vec<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    /// Half-width of the 95% confidence interval of the slope.
    pub slope_ci: Option<f64>,
}

impl MetricReport {
    fn new(epsilons: &[f64], values: Vec<f64>) -> Self {
        let fit: Option<LinearFit> = if values.len() >= 3 {
            let pairs: Vec<(f64, f64)> = epsilons.iter().copied().zip(values.iter().copied()).collect();
            rate_fit(&pairs).ok()
        } else {
            None
        };
        Self {
            values,
            slope: fit.map(|f| f.slope),
            intercept: fit.map(|f| f.intercept),
            r2: fit.map(|f| f.r2),
            slope_ci: fit.map(|f| f.slope_ci).filter(|c| c.is_finite()),
        }
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }

    /// Non-increasing except for at most `allowed` inversions of relative
    /// size below `tolerance`.
    pub fn nearly_monotone(&self, tolerance: f64, allowed: usize) -> bool {
        let mut inversions = 0;
        for w in self.values.windows(2) {
            if w[1] > w[0] {
                if w[1] > w[0] * (1.0 + tolerance) {
                    return false;
                }
                inversions += 1;
            }
        }
        inversions <= allowed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub epsilons: Vec<f64>,
    pub metrics: BTreeMap<String, MetricReport>,
    pub complete: bool,
    /// `(ε, error message)` of aborted runs.
    pub failures: Vec<(f64, String)>,
}

impl ConvergenceReport {
    pub fn metric(&self, name: &str) -> Option<&MetricReport> {
        self.metrics.get(name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One CSV per metric, `epsilon,value`; returns the written paths.
    pub fn write_csvs(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        let mut paths = Vec::new();
        for (name, m) in &self.metrics {
            let path = dir.join(format!("{name}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["epsilon", "value"])?;
            for (e, v) in self.epsilons.iter().zip(&m.values) {
                w.write_record([format!("{e:e}"), format!("{v:e}")])?;
            }
            w.flush()?;
            paths.push(path);
        }
        Ok(paths)
    }
}

pub const METRIC_PV_SUP: &str = "err_pv_sup_l2";

pub fn metric_pv_besov(p: f64) -> String {
    format!("err_pv_l1_besov_{}", p_label(p))
}

pub fn metric_acoustic(p: f64) -> String {
    format!("err_acoustic_{}", p_label(p))
}

pub fn metric_field(p: f64) -> String {
    format!("err_field_{}", p_label(p))
}

fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "pinf".into()
    } else {
        format!("p{p}")
    }
}

/// Per-run metric accumulators along the shared schedule.
#[derive(Debug, Clone)]
struct RunMetrics {
    pv_sup: f64,
    /// Per `p`: trapezoid sums of (Pv error, acoustic, field) Besov norms.
    sums: Vec<[f64; 3]>,
    last: Option<Vec<[f64; 3]>>,
}

/// Runs the full system for every `ε` and the limit system once, on a shared
/// snapshot schedule, and fits `log(err)` against `log(ε)`.
pub fn run_sweep(n01: &SpectralField, v0: &SpectralField, config: &SweepConfig) -> Result<ConvergenceReport> {
    run_sweep_with_runs(n01, v0, config).map(|s| s.0)
}

/// As [`run_sweep`], also returning the diagnostics trajectory of every
/// completed run.
pub fn run_sweep_with_runs(
    n01: &SpectralField,
    v0: &SpectralField,
    config: &SweepConfig,
) -> Result<(ConvergenceReport, Vec<(f64, Trajectory)>)> {
    let v = config.violations();
    if !v.is_empty() {
        return Err(Error::Config(v.join("; ")));
    }
    let snapshots = (config.t_end / config.snapshot_dt).round() as usize;
    let (limit_dt, limit_per) = config.step_for(1.0);
    let mut limit_cfg = LimitConfig::new(limit_dt, config.t_end);
    limit_cfg.record_every = limit_per;
    let u0 = leray_project(v0)?.0;
    let limit = limit_solve(&u0, &limit_cfg)?;
    debug_assert_eq!(limit.len(), snapshots + 1);
    let ps = config.besov_p.clone();

    let results: Vec<std::result::Result<(RunMetrics, Trajectory), String>> = config
        .epsilons
        .par_iter()
        .map(|&eps| run_one(n01, v0, config, &limit, &ps, eps).map_err(|e| e.to_string()))
        .collect();

    let mut failures = Vec::new();
    let mut done = Vec::new();
    let mut runs = Vec::new();
    for (&eps, r) in config.epsilons.iter().zip(results) {
        match r {
            Ok((m, t)) => {
                done.push((eps, m));
                runs.push((eps, t));
            }
            Err(e) => failures.push((eps, e)),
        }
    }
    let eps_done: Vec<f64> = done.iter().map(|d| d.0).collect();
    let mut metrics = BTreeMap::new();
    metrics.insert(METRIC_PV_SUP.to_string(), MetricReport::new(&eps_done, done.iter().map(|d| d.1.pv_sup).collect()));
    for (i, &p) in ps.iter().enumerate() {
        let col = |j: usize| done.iter().map(|d| d.1.sums[i][j]).collect::<Vec<_>>();
        metrics.insert(metric_pv_besov(p), MetricReport::new(&eps_done, col(0)));
        metrics.insert(metric_acoustic(p), MetricReport::new(&eps_done, col(1)));
        metrics.insert(metric_field(p), MetricReport::new(&eps_done, col(2)));
    }
    Ok((ConvergenceReport { epsilons: eps_done, metrics, complete: failures.is_empty(), failures }, runs))
}

fn run_one(
    n01: &SpectralField,
    v0: &SpectralField,
    config: &SweepConfig,
    limit: &[LimitState],
    ps: &[f64],
    eps: f64,
) -> Result<(RunMetrics, Trajectory)> {
    let params = config.base.with_epsilon(eps)?;
    let initial = build_ill_prepared_with(n01, v0, &params, config.smallness)?;
    let (dt, per) = config.step_for(eps);
    let mut solver = SolverConfig::new(params, config.grid, dt, config.t_end);
    solver.record_every = per;
    solver.keep_states = false;
    let h = config.snapshot_dt;
    let dim = config.grid.dim();
    let besov: Vec<BesovParams> = ps
        .iter()
        .map(|&p| BesovParams::new(dim as f64 / p, p, Summation::One))
        .collect::<Result<_>>()?;
    let mut metrics = RunMetrics { pv_sup: 0.0, sums: vec![[0.0; 3]; ps.len()], last: None };
    let mut index = 0usize;
    let trajectory = solve_observed(&solver, &initial, |state, _| {
        let u = &limit[index].u;
        index += 1;
        let (pv, qv) = leray_project(&state.v)?;
        let w = pv.sub(u);
        metrics.pv_sup = metrics.pv_sup.max(w.l2_norm());
        let current: Vec<[f64; 3]> = besov
            .iter()
            .map(|b| {
                [
                    besov_norm(&w, b),
                    besov_norm_tuple(&[&state.m, &qv], b),
                    besov_norm(&state.grad_phi, b),
                ]
            })
            .collect();
        if let Some(prev) = &metrics.last {
            for (s, (a, c)) in metrics.sums.iter_mut().zip(prev.iter().zip(&current)) {
                for j in 0..3 {
                    s[j] += 0.5 * h * (a[j] + c[j]);
                }
            }
        }
        metrics.last = Some(current);
        Ok(())
    })?;
    Ok((metrics, trajectory))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::{random_field, rng};
    use std::f64::consts::PI;

    fn solenoidal(grid: TorusGrid, seed: u64, amp: f64) -> SpectralField {
        let mut r = rng(seed);
        let v = random_field(grid, 2, &mut r, 3, 1.0, true);
        let mut p = leray_project(&v).unwrap().0;
        let s = p.to_physical().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        p.scale(amp / s);
        p
    }

    #[test]
    fn zero_stays_zero() {
        let grid = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let out = limit_solve(&SpectralField::zeros(grid, 2), &LimitConfig::new(0.1, 1.0)).unwrap();
        assert_eq!(out.len(), 11);
        assert!(out.iter().all(|s| s.u.l2_norm() == 0.0));
    }

    #[test]
    fn pure_damping_is_exact() {
        let grid = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let u0 = solenoidal(grid, 4, 0.3);
        let mut cfg = LimitConfig::new(0.1, 2.0);
        cfg.advection = false;
        let out = limit_solve(&u0, &cfg).unwrap();
        for s in &out {
            let exact = u0.scaled((-s.time).exp());
            assert!(s.u.sub(&exact).l2_norm() <= 1e-14 * u0.l2_norm());
        }
    }

    #[test]
    fn stays_solenoidal_and_converges_at_second_order() {
        let grid = TorusGrid::new(2, 32, 2.0 * PI).unwrap();
        let u0 = solenoidal(grid, 5, 0.5);
        let fin = |dt: f64| limit_solve(&u0, &LimitConfig::new(dt, 1.0)).unwrap().pop().unwrap().u;
        let (a, b, c) = (fin(0.04), fin(0.02), fin(0.01));
        let order = (a.sub(&b).l2_norm() / b.sub(&c).l2_norm()).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
        let q = leray_project(&c).unwrap().1;
        assert!(q.l2_norm() <= 1e-12 * c.l2_norm());
        // decay bound with the damping rate
        assert!(c.l2_norm() <= u0.l2_norm() * (-1.0f64).exp() * 1.05);
    }

    #[test]
    fn rejects_compressible_data() {
        let grid = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let v = SpectralField::from_fn(grid, 2, |x, c| if c == 0 { x[0].sin() } else { 0.0 });
        assert!(matches!(limit_solve(&v, &LimitConfig::new(0.1, 1.0)), Err(Error::Precondition(_))));
    }

    fn sweep_config(grid: TorusGrid, eps: Vec<f64>) -> SweepConfig {
        SweepConfig {
            base: ModelParams::default(),
            grid,
            epsilons: eps,
            t_end: 0.4,
            snapshot_dt: 0.02,
            dt_max: 0.02,
            dt_per_epsilon: 0.1,
            besov_p: vec![2.0, f64::INFINITY],
            smallness: 1.0,
        }
    }

    #[test]
    fn solenoidal_data_coincide() {
        // n01 = 0 and tiny solenoidal v0: both systems reduce to v_t = -v.
        let grid = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let v0 = solenoidal(grid, 6, 1e-13);
        let n01 = SpectralField::zeros(grid, 1);
        let report = run_sweep(&n01, &v0, &sweep_config(grid, vec![0.2, 0.1, 0.05])).unwrap();
        assert!(report.complete);
        for &v in &report.metric(METRIC_PV_SUP).unwrap().values {
            assert!(v <= 1e-10, "{v:e}");
        }
    }

    #[test]
    fn sweep_validation() {
        let grid = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let cfg = sweep_config(grid, vec![0.1, 0.2]);
        assert!(!cfg.violations().is_empty());
        let n01 = SpectralField::zeros(grid, 1);
        let v0 = SpectralField::zeros(grid, 2);
        assert!(matches!(run_sweep(&n01, &v0, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn report_serialization() {
        let eps = vec![0.2, 0.1, 0.05];
        let mut metrics = BTreeMap::new();
        metrics.insert("x".to_string(), MetricReport::new(&eps, eps.iter().map(|e| 2.0 * e).collect()));
        let report = ConvergenceReport { epsilons: eps, metrics, complete: true, failures: vec![] };
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!((json["metrics"]["x"]["slope"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        let dir = tempfile::tempdir().unwrap();
        let paths = report.write_csvs(dir.path()).unwrap();
        assert_eq!(paths.len(), 1);
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn step_selection_divides_schedule() {
        let grid = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let cfg = sweep_config(grid, vec![0.2, 0.1]);
        for eps in [0.2, 0.1, 0.05, 0.025, 0.013] {
            let (dt, per) = cfg.step_for(eps);
            assert!(dt <= 0.1 * eps + 1e-15 || dt <= cfg.dt_max);
            assert!((dt * per as f64 - cfg.snapshot_dt).abs() < 1e-15);
        }
    }
}
