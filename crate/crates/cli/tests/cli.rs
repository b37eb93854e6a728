use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn epzero(args: &[&str], config: &str, dir: &Path) -> Output {
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_epzero"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .env_remove("EPZERO_JOBS")
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL_RUN: &str = r#"
experiment = "single-run"
[grid]
points = 32
periods = 4
[solver]
dt = 0.02
t_end = 0.2
record_every = 2
[data]
width = 1.5
amplitude = 0.02
"#;

#[test]
fn unit_suite_passes_and_hashes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let res = epzero(&["unit-suite", "--out", out.to_str().unwrap()], "experiment = \"unit-suite\"\n", tmp.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 7, "{stdout}");
    let m = manifest(&out);
    assert_eq!(m["passed"], Value::Bool(true));
    assert_eq!(m["experiment"], "unit-suite");
    assert!(!m["version"].as_str().unwrap().is_empty());
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1);
    for o in outputs {
        let bytes = fs::read(out.join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert_eq!(o["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
}

#[test]
fn reruns_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let res = epzero(&["single-run", "--out", dir.to_str().unwrap(), "--seed", "3"], SMALL_RUN, tmp.path());
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for name in ["trajectory.csv", "final_state.bin", "checks.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_eq!(manifest(&a)["outputs"], manifest(&b)["outputs"]);
    let csv = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,mass_mean,L2_m,L2_Pv,L2_Qv,L2_gradphi,besov_sigma,Q_energy"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn invalid_config_lists_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = "experiment = \"decay\"\nspeed = 3\n[model]\ngamma = 0.5\n[sweep]\nepsilons = [0.1, 0.1]\n";
    let res = epzero(&["decay"], doc, tmp.path());
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("3 problems"), "{err}");
    assert!(err.contains("unknown key `speed`"));
    assert!(err.contains("gamma must be >= 1"));
    assert!(err.contains("strictly decreasing"));
}

#[test]
fn experiment_must_match_config() {
    let tmp = tempfile::tempdir().unwrap();
    let res = epzero(&["decay"], "experiment = \"unit-suite\"\n", tmp.path());
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("configures `unit-suite`"));
}

#[test]
fn limit_sweep_writes_one_csv_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let doc = r#"
experiment = "limit-sweep"
[grid]
points = 32
periods = 4
[solver]
t_end = 0.2
[sweep]
epsilons = [0.2, 0.1, 0.05, 0.025]
"#;
    let res = Command::new(env!("CARGO_BIN_EXE_epzero"))
        .args(["limit-sweep", "--config"])
        .arg({
            let p = tmp.path().join("sweep.toml");
            fs::write(&p, doc).unwrap();
            p
        })
        .arg("--out")
        .arg(&out)
        .env("EPZERO_JOBS", "2")
        .output()
        .unwrap();
    assert!(res.status.code() == Some(0) || res.status.code() == Some(1));
    let runs = fs::read_dir(out.join("runs")).unwrap().count();
    assert_eq!(runs, 4);
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["epsilons"].as_array().unwrap().len(), 4);
    assert!(report["metrics"]["err_pv_sup_l2"]["slope"].is_number());
    let m = manifest(&out);
    let listed = m["outputs"].as_array().unwrap().len();
    // runs, report, metric tables, checks table
    assert_eq!(listed, 4 + 1 + 7 + 1);
    assert_eq!(m["passed"].as_bool().unwrap(), res.status.success());
}

#[test]
fn module_errors_are_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    let doc = SMALL_RUN.replace("amplitude = 0.02", "amplitude = 5.0");
    let res = epzero(&["single-run", "--out", out.to_str().unwrap()], &doc, tmp.path());
    assert_eq!(res.status.code(), Some(1));
    let m = manifest(&out);
    assert_eq!(m["passed"], Value::Bool(false));
    assert!(!m["error"].as_str().unwrap().is_empty());
}
