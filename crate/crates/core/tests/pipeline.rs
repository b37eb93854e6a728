use std::f64::consts::PI;

use epzero_core::checks::*;
use epzero_core::limit::{metric_acoustic, run_sweep_with_runs, SweepConfig, METRIC_PV_SUP};
use epzero_core::plasma::{build_ill_prepared_with, ModelParams};
use epzero_core::solver::{read_snapshot, solve, write_snapshot, SolverConfig};
use epzero_core::spectral::TorusGrid;

fn small_grid() -> TorusGrid {
    TorusGrid::new(2, 32, 2.0 * PI * 4.0).unwrap()
}

#[test]
fn gaussian_data_is_mean_zero_and_scaled() {
    let params = ModelParams::default();
    let (n01, v0) = gaussian_data(small_grid(), 1.5, 0.02, &params);
    assert_eq!(n01.mean(0), 0.0);
    let state = build_ill_prepared_with(&n01, &v0, &params, 1.0).unwrap();
    let sup = |f: &epzero_core::spectral::SpectralField| f.to_physical().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    assert!((sup(&state.v) - 0.02).abs() < 1e-12);
    assert!(sup(&state.m) < 0.03 && sup(&state.m) > 0.01);
}

#[test]
fn tiny_data_follow_the_linear_propagator() {
    let settings = LinearRegimeSettings {
        grid: small_grid(),
        width: 1.5,
        amplitude: 1e-6,
        dt: 0.05,
        compare_until: 1.0,
        t_end: 1.0,
        record_interval: 0.25,
    };
    let (dev, drift) = linear_regime_run(&settings, 0.1).unwrap();
    assert!(dev <= 1e-6, "{dev:e}");
    assert!(drift <= 1e-15, "{drift:e}");
}

#[test]
fn restart_from_snapshot_matches_uninterrupted_run() {
    let grid = small_grid();
    let params = ModelParams::default().with_epsilon(0.2).unwrap();
    let (n01, v0) = gaussian_data(grid, 1.5, 0.05, &params);
    let initial = build_ill_prepared_with(&n01, &v0, &params, 1.0).unwrap();
    let full = solve(&SolverConfig::new(params, grid, 0.02, 0.4), &initial).unwrap();
    let half = solve(&SolverConfig::new(params, grid, 0.02, 0.2), &initial).unwrap();
    let mut bytes = Vec::new();
    write_snapshot(&mut bytes, half.final_state().unwrap(), &params).unwrap();
    let (restored, p) = read_snapshot(bytes.as_slice()).unwrap();
    assert_eq!(p, params);
    let rest = solve(&SolverConfig::new(p, grid, 0.02, 0.2), &restored).unwrap();
    let a = full.final_state().unwrap();
    let b = rest.final_state().unwrap();
    assert!((a.time - b.time).abs() < 1e-12);
    assert!(a.m.sub(&b.m).l2_norm() <= 1e-13 * a.m.l2_norm());
    assert!(a.v.sub(&b.v).l2_norm() <= 1e-13 * a.v.l2_norm());
}

#[test]
fn small_sweep_end_to_end() {
    let grid = small_grid();
    let cfg = SweepConfig {
        base: ModelParams::default(),
        grid,
        epsilons: vec![0.2, 0.1, 0.05],
        t_end: 0.2,
        snapshot_dt: 0.02,
        dt_max: 0.02,
        dt_per_epsilon: 0.1,
        besov_p: vec![2.0, f64::INFINITY],
        smallness: 1.0,
    };
    let (n01, v0) = gaussian_data(grid, 1.5, 0.05, &cfg.base);
    let (report, runs) = run_sweep_with_runs(&n01, &v0, &cfg).unwrap();
    assert!(report.complete);
    assert_eq!(runs.len(), 3);
    assert_eq!(report.metrics.len(), 7);
    for (_, t) in &runs {
        assert_eq!(t.snapshots.len(), 11);
    }
    let pv = report.metric(METRIC_PV_SUP).unwrap();
    assert!(pv.values.iter().all(|v| *v > 0.0 && v.is_finite()));
    assert!(pv.slope.is_some() && report.metric(&metric_acoustic(2.0)).is_some());
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(report.write_csvs(dir.path()).unwrap().len(), 7);
}

fn sample(kernel: usize, k: i32, t: f64, tau: f64, measured: f64, bound: f64) -> DispersiveSample {
    DispersiveSample { kernel, k, t, tau, rho: 0.0, measured, bound }
}

#[test]
fn dispersive_judgement() {
    let taus: [f64; 4] = [1.0, 4.0, 16.0, 64.0];
    let build = |drift: f64| {
        let mut out = Vec::new();
        for k in 0..3 {
            for tau in taus {
                let bound = 2f64.powi(k) * tau.powf(-0.5);
                out.push(sample(1, k, 0.0, tau, bound * drift.powi(k), bound));
            }
        }
        out
    };
    assert!(judge_dispersive(&build(1.0)).0);
    assert!(judge_dispersive(&build(1.5)).0);
    assert!(!judge_dispersive(&build(2.0)).0);
    // flat in tau violates the envelope
    let flat: Vec<_> = taus.iter().map(|&tau| sample(2, 0, 0.0, tau, 1.0, 1.0)).collect();
    assert!(!judge_dispersive(&flat).0);
}

#[test]
fn strichartz_judgement() {
    assert!(judge_strichartz(&[(0, 0.1, 1.0), (0, 0.05, 0.6), (1, 0.1, 0.9)]).0);
    assert!(!judge_strichartz(&[(0, 0.1, 1.0), (0, 0.05, 0.4)]).0);
}

#[test]
fn outcome_line_format() {
    let ok = guarded(3, "x", || Ok((true, "fine".into())));
    assert!(ok.line().starts_with("[PASS]  3 x: fine"));
    let bad = guarded(4, "y", || Err(epzero_core::Error::Config("boom".into())));
    assert!(!bad.passed && bad.detail.contains("boom"));
}
