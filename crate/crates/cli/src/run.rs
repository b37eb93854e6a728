//! Experiment execution, output files and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use epzero_core::checks::{
    decay_runs, degenerate_coupling, dispersive_samples, fast_checks, guarded, judge_decay, judge_dispersive,
    judge_limit, judge_strichartz, limit_runs, strichartz_ratios, CheckOutcome, DecaySettings, DispersiveSettings,
    LimitSettings, StrichartzSettings,
};
use epzero_core::plasma::build_ill_prepared_with;
use epzero_core::solver::{solve, write_snapshot, Metric, SolverConfig, Trajectory};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{default_single_grid, Experiment, RunConfig};

pub const MANIFEST_NAME: &str = "manifest.json";

/// `git describe`-style version recorded at build time.
pub const VERSION: &str = env!("EPZERO_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: Experiment,
    pub seed: u64,
    pub config: RunConfig,
    pub config_text: String,
    pub wall_seconds: f64,
    pub passed: bool,
    pub error: Option<String>,
    pub checks: Vec<CheckOutcome>,
    pub outputs: Vec<OutputEntry>,
}

impl Manifest {
    pub fn passed(&self) -> bool {
        self.passed
    }
}

/// Runs `config` into `out`, always writing a manifest, and returns it.
pub fn run(config: &RunConfig, config_text: &str, out: &Path) -> Result<Manifest> {
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))?;
    let start = Instant::now();
    let mut files = Vec::new();
    let result = execute(config, out, &mut files);
    let (checks, error) = match result {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(format!("{e:#}"))),
    };
    let mut outputs = Vec::new();
    for path in &files {
        outputs.push(hash_entry(out, path)?);
    }
    let passed = error.is_none() && !checks.is_empty() && checks.iter().all(|c| c.passed);
    let manifest = Manifest {
        tool: "epzero",
        version: VERSION,
        experiment: config.experiment,
        seed: config.seed,
        config: config.clone(),
        config_text: config_text.to_string(),
        wall_seconds: start.elapsed().as_secs_f64(),
        passed,
        error,
        checks,
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(out.join(MANIFEST_NAME), text + "\n")?;
    Ok(manifest)
}

fn hash_entry(root: &Path, path: &Path) -> Result<OutputEntry> {
    let bytes = fs::read(path).with_context(|| format!("cannot read output {}", path.display()))?;
    let rel = path.strip_prefix(root).unwrap_or(path);
    Ok(OutputEntry {
        path: rel.to_string_lossy().replace('\\', "/"),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn execute(config: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<CheckOutcome>> {
    match config.experiment {
        Experiment::UnitSuite => unit_suite(config, out, files),
        Experiment::Decay => decay(config, out, files),
        Experiment::Dispersive => dispersive(config, out, files),
        Experiment::Strichartz => strichartz(config, out, files),
        Experiment::LimitSweep => limit_sweep(config, out, files),
        Experiment::SingleRun => single_run(config, out, files),
    }
}

fn model_error(v: Vec<String>) -> anyhow::Error {
    anyhow::anyhow!(v.join("; "))
}

fn write_csv(path: PathBuf, header: &[&str], rows: Vec<Vec<String>>, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    files.push(path);
    Ok(())
}

fn write_json<T: Serialize>(path: PathBuf, value: &T, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    files.push(path);
    Ok(())
}

fn save_trajectory(path: PathBuf, t: &Trajectory, files: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    t.save_csv(&path)?;
    files.push(path);
    Ok(())
}

fn checks_table(checks: &[CheckOutcome], out: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let rows = checks
        .iter()
        .map(|c| vec![c.id.to_string(), c.name.clone(), c.passed.to_string(), c.detail.clone()])
        .collect();
    write_csv(out.join("checks.csv"), &["id", "name", "passed", "detail"], rows, files)
}

fn unit_suite(config: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<CheckOutcome>> {
    let checks = fast_checks(config.seed);
    checks_table(&checks, out, files)?;
    Ok(checks)
}

pub fn decay_settings(config: &RunConfig) -> Result<DecaySettings> {
    let mut s = DecaySettings::default();
    s.base = config.model.params().map_err(model_error)?;
    s.grid = config.grid.grid(s.grid).map_err(anyhow::Error::msg)?;
    if let Some(e) = &config.sweep.epsilons {
        s.epsilons = e.clone();
    }
    s.width = config.data.width.unwrap_or(s.width);
    s.amplitude = config.data.amplitude.unwrap_or(s.amplitude);
    s.t_end = config.solver.t_end.unwrap_or(s.t_end);
    s.dt_max = config.solver.dt_max.unwrap_or(s.dt_max);
    s.dt_per_epsilon = config.solver.dt_per_epsilon.unwrap_or(s.dt_per_epsilon);
    s.record_interval = config.solver.record_interval.unwrap_or(s.record_interval);
    Ok(s)
}

#[derive(Serialize)]
struct DecayFitRow {
    epsilon: f64,
    rate: f64,
    amplitude: f64,
    r2: f64,
}

fn decay(config: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<CheckOutcome>> {
    let settings = decay_settings(config)?;
    let runs = decay_runs(&settings)?;
    let mut fits = Vec::new();
    for (eps, t) in &runs {
        save_trajectory(out.join("runs").join(format!("eps_{eps}.csv")), t, files)?;
        let f = t.decay_fit(Metric::BesovSigma)?;
        fits.push(DecayFitRow { epsilon: *eps, rate: f.rate, amplitude: f.amplitude, r2: f.r2 });
    }
    write_json(out.join("decay_fits.json"), &fits, files)?;
    let check = guarded(8, "uniform exponential decay", || judge_decay(&runs));
    let checks = vec![check];
    checks_table(&checks, out, files)?;
    Ok(checks)
}

pub fn dispersive_settings(config: &RunConfig) -> DispersiveSettings {
    let mut s = DispersiveSettings::default();
    s.epsilon = config.model.epsilon.unwrap_or(s.epsilon);
    if let Some(ks) = &config.dispersive.ks {
        s.ks = ks.iter().map(|&k| k as i32).collect();
    }
    if let Some(t) = &config.dispersive.taus {
        s.taus = t.clone();
    }
    if let Some(t) = &config.dispersive.ts {
        s.ts = t.clone();
    }
    s
}

fn dispersive(config: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<CheckOutcome>> {
    let settings = dispersive_settings(config);
    let samples = dispersive_samples(&settings)?;
    let rows = samples
        .iter()
        .map(|s| {
            vec![
                s.kernel.to_string(),
                s.k.to_string(),
                format!("{:e}", s.t),
                format!("{:e}", s.tau),
                format!("{:e}", s.rho),
                format!("{:e}", s.measured),
                format!("{:e}", s.bound),
                format!("{:e}", s.measured / s.bound),
            ]
        })
        .collect();
    write_csv(out.join("dispersive.csv"), &["kernel", "k", "t", "tau", "rho", "measured", "bound", "ratio"], rows, files)?;
    let checks = vec![guarded(10, "dispersive bound", || Ok(judge_dispersive(&samples)))];
    checks_table(&checks, out, files)?;
    Ok(checks)
}

pub fn strichartz_settings(config: &RunConfig) -> Result<StrichartzSettings> {
    let mut s = StrichartzSettings::default();
    s.grid = config.grid.grid(s.grid).map_err(anyhow::Error::msg)?;
    if let Some(e) = &config.sweep.epsilons {
        s.epsilons = e.clone();
    }
    if let Some(b) = &config.strichartz.blocks {
        s.blocks = b.iter().map(|&k| k as i32).collect();
    }
    s.width = config.data.width.unwrap_or(s.width);
    s.t_end = config.solver.t_end.unwrap_or(s.t_end);
    s.dt_per_epsilon = config.solver.dt_per_epsilon.unwrap_or(s.dt_per_epsilon);
    Ok(s)
}

fn strichartz(config: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<CheckOutcome>> {
    let settings = strichartz_settings(config)?;
    let ratios = strichartz_ratios(&settings)?;
    let rows = ratios.iter().map(|(k, e, r)| vec![k.to_string(), format!("{e:e}"), format!("{r:e}")]).collect();
    write_csv(out.join("strichartz.csv"), &["block", "epsilon", "ratio"], rows, files)?;
    let checks = vec![guarded(11, "Strichartz eps-scaling", || Ok(judge_strichartz(&ratios)))];
    checks_table(&checks, out, files)?;
    Ok(checks)
}

pub fn limit_settings(config: &RunConfig) -> Result<LimitSettings> {
    let mut s = LimitSettings::default();
    s.sweep.base = config.model.params().map_err(model_error)?;
    s.sweep.grid = config.grid.grid(s.sweep.grid).map_err(anyhow::Error::msg)?;
    if let Some(e) = &config.sweep.epsilons {
        s.sweep.epsilons = e.clone();
    }
    if let Some(p) = &config.sweep.besov_p {
        s.sweep.besov_p = p.clone();
    }
    s.sweep.snapshot_dt = config.sweep.snapshot_dt.unwrap_or(s.sweep.snapshot_dt);
    s.sweep.t_end = config.solver.t_end.unwrap_or(s.sweep.t_end);
    s.sweep.dt_max = config.solver.dt_max.unwrap_or(s.sweep.dt_max);
    s.sweep.dt_per_epsilon = config.solver.dt_per_epsilon.unwrap_or(s.sweep.dt_per_epsilon);
    s.width = config.data.width.unwrap_or(s.width);
    s.amplitude = config.data.amplitude.unwrap_or(s.amplitude);
    let v = s.sweep.violations();
    if !v.is_empty() {
        bail!(v.join("; "));
    }
    Ok(s)
}

fn limit_sweep(config: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<CheckOutcome>> {
    let settings = limit_settings(config)?;
    let (report, runs) = limit_runs(&settings)?;
    for (eps, t) in &runs {
        save_trajectory(out.join("runs").join(format!("eps_{eps}.csv")), t, files)?;
    }
    let path = out.join("report.json");
    fs::write(&path, report.to_json() + "\n")?;
    files.push(path);
    let dir = out.join("metrics");
    fs::create_dir_all(&dir)?;
    files.extend(report.write_csvs(&dir)?);
    let mut checks = vec![guarded(12, "zero-electron-mass convergence", || Ok(judge_limit(&report)))];
    if !report.complete {
        checks.push(CheckOutcome {
            id: 12,
            name: "sweep completeness".into(),
            passed: false,
            detail: format!("{} run(s) aborted", report.failures.len()),
            seconds: 0.0,
        });
    }
    checks_table(&checks, out, files)?;
    Ok(checks)
}

fn single_run(config: &RunConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<CheckOutcome>> {
    let params = config.model.params().map_err(model_error)?;
    let grid = config.grid.grid(default_single_grid()).map_err(anyhow::Error::msg)?;
    let s = &config.solver;
    let mut cfg = SolverConfig::new(params, grid, s.dt.unwrap_or(0.05), s.t_end.unwrap_or(10.0));
    cfg.record_every = s.record_every.unwrap_or(2);
    cfg.dealias = s.dealias.unwrap_or(cfg.dealias);
    cfg.poisson_tol = s.poisson_tol.unwrap_or(cfg.poisson_tol);
    cfg.vacuum_margin = s.vacuum_margin.unwrap_or(cfg.vacuum_margin);
    cfg.keep_states = false;
    cfg.validate()?;
    let (n01, v0) = epzero_core::checks::gaussian_data(
        grid,
        config.data.width.unwrap_or(1.5),
        config.data.amplitude.unwrap_or(0.05),
        &params,
    );
    let initial = build_ill_prepared_with(&n01, &v0, &params, 1.0)?;
    let start = Instant::now();
    let traj = solve(&cfg, &initial)?;
    let seconds = start.elapsed().as_secs_f64();
    save_trajectory(out.join("trajectory.csv"), &traj, files)?;
    let path = out.join("final_state.bin");
    let mut f = fs::File::create(&path)?;
    write_snapshot(&mut f, traj.final_state().context("solver returned no final state")?, &params)?;
    f.flush()?;
    files.push(path);
    let drift = traj.mass_drift();
    let mut checks = vec![
        CheckOutcome {
            id: 0,
            name: "run completed".into(),
            passed: true,
            detail: format!("{} steps to t = {}", cfg.steps(), cfg.t_end),
            seconds,
        },
        CheckOutcome {
            id: 7,
            name: "mass conservation".into(),
            passed: drift <= 1e-9,
            detail: format!("drift {drift:.2e}"),
            seconds: 0.0,
        },
    ];
    checks.extend(degenerate_check(&params));
    checks_table(&checks, out, files)?;
    Ok(checks)
}

/// The zero-correction check only applies to `γ = 3, A = 1/3, n̄ = 1`.
fn degenerate_check(params: &epzero_core::plasma::ModelParams) -> Option<CheckOutcome> {
    let degenerate = params.gamma() == 3.0 && (params.a() - 1.0 / 3.0).abs() < 1e-15 && params.n_bar() == 1.0;
    degenerate.then(|| degenerate_coupling(0))
}
