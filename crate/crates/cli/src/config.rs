//! TOML run configuration. Parsing walks the whole document and reports
//! every problem at once.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use epzero_core::plasma::ModelParams;
use epzero_core::solver::SolverConfig;
use epzero_core::spectral::TorusGrid;
use serde::Serialize;
use toml::{Table, Value};

pub const DEFAULT_SEED: u64 = 20240611;
pub const DEFAULT_OUTPUT_DIR: &str = "epzero-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    UnitSuite,
    Decay,
    Dispersive,
    Strichartz,
    LimitSweep,
    SingleRun,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::UnitSuite,
        Experiment::Decay,
        Experiment::Dispersive,
        Experiment::Strichartz,
        Experiment::LimitSweep,
        Experiment::SingleRun,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::UnitSuite => "unit-suite",
            Experiment::Decay => "decay",
            Experiment::Dispersive => "dispersive",
            Experiment::Strichartz => "strichartz",
            Experiment::LimitSweep => "limit-sweep",
            Experiment::SingleRun => "single-run",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModelBlock {
    pub gamma: Option<f64>,
    pub a: Option<f64>,
    pub n_bar: Option<f64>,
    pub epsilon: Option<f64>,
}

impl ModelBlock {
    /// Parameters with unset entries taken from `ModelParams::default()`.
    pub fn params(&self) -> Result<ModelParams, Vec<String>> {
        let d = ModelParams::default();
        let (g, a, n, e) = (
            self.gamma.unwrap_or(d.gamma()),
            self.a.unwrap_or(d.a()),
            self.n_bar.unwrap_or(d.n_bar()),
            self.epsilon.unwrap_or(d.epsilon()),
        );
        let v = ModelParams::violations(g, a, n, e);
        if v.is_empty() {
            Ok(ModelParams::new(g, a, n, e).expect("validated"))
        } else {
            Err(v)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GridBlock {
    pub dim: Option<usize>,
    pub points: Option<usize>,
    pub length: Option<f64>,
}

impl GridBlock {
    pub fn is_set(&self) -> bool {
        self.dim.is_some() || self.points.is_some() || self.length.is_some()
    }

    /// Grid with unset entries taken from `fallback`.
    pub fn grid(&self, fallback: TorusGrid) -> Result<TorusGrid, String> {
        TorusGrid::new(
            self.dim.unwrap_or(fallback.dim()),
            self.points.unwrap_or(fallback.points()),
            self.length.unwrap_or(fallback.length()),
        )
        .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverBlock {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub record_every: Option<usize>,
    pub record_interval: Option<f64>,
    pub dealias: Option<bool>,
    pub poisson_tol: Option<f64>,
    pub vacuum_margin: Option<f64>,
    pub dt_max: Option<f64>,
    pub dt_per_epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DataBlock {
    pub width: Option<f64>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepBlock {
    pub epsilons: Option<Vec<f64>>,
    pub snapshot_dt: Option<f64>,
    pub besov_p: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DispersiveBlock {
    pub ks: Option<Vec<i64>>,
    pub taus: Option<Vec<f64>>,
    pub ts: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StrichartzBlock {
    pub blocks: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub model: ModelBlock,
    pub grid: GridBlock,
    pub solver: SolverBlock,
    pub data: DataBlock,
    pub sweep: SweepBlock,
    pub dispersive: DispersiveBlock,
    pub strichartz: StrichartzBlock,
    pub output_dir: PathBuf,
    pub seed: u64,
}

/// Every problem found in a configuration document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem{}):", self.0.len(), if self.0.len() == 1 { "" } else { "s" })?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

struct Walker {
    errors: Vec<String>,
}

impl Walker {
    fn key(section: &str, key: &str) -> String {
        if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        }
    }

    fn float(&mut self, t: &mut Table, section: &str, key: &str) -> Option<f64> {
        match t.remove(key)? {
            Value::Float(x) => Some(x),
            Value::Integer(i) => Some(i as f64),
            other => {
                self.errors.push(format!("`{}` must be a number, got {}", Self::key(section, key), other.type_str()));
                None
            }
        }
    }

    fn int(&mut self, t: &mut Table, section: &str, key: &str) -> Option<i64> {
        match t.remove(key)? {
            Value::Integer(i) => Some(i),
            other => {
                self.errors.push(format!("`{}` must be an integer, got {}", Self::key(section, key), other.type_str()));
                None
            }
        }
    }

    fn count(&mut self, t: &mut Table, section: &str, key: &str) -> Option<usize> {
        let i = self.int(t, section, key)?;
        if i < 0 {
            self.errors.push(format!("`{}` must be non-negative, got {i}", Self::key(section, key)));
            return None;
        }
        Some(i as usize)
    }

    fn boolean(&mut self, t: &mut Table, section: &str, key: &str) -> Option<bool> {
        match t.remove(key)? {
            Value::Boolean(b) => Some(b),
            other => {
                self.errors.push(format!("`{}` must be a boolean, got {}", Self::key(section, key), other.type_str()));
                None
            }
        }
    }

    fn string(&mut self, t: &mut Table, section: &str, key: &str) -> Option<String> {
        match t.remove(key)? {
            Value::String(s) => Some(s),
            other => {
                self.errors.push(format!("`{}` must be a string, got {}", Self::key(section, key), other.type_str()));
                None
            }
        }
    }

    fn floats(&mut self, t: &mut Table, section: &str, key: &str) -> Option<Vec<f64>> {
        let name = Self::key(section, key);
        match t.remove(key)? {
            Value::Array(items) => {
                let mut out = Vec::new();
                for v in items {
                    match v {
                        Value::Float(x) => out.push(x),
                        Value::Integer(i) => out.push(i as f64),
                        other => {
                            self.errors.push(format!("`{name}` must hold numbers, found {}", other.type_str()));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            other => {
                self.errors.push(format!("`{name}` must be an array, got {}", other.type_str()));
                None
            }
        }
    }

    fn ints(&mut self, t: &mut Table, section: &str, key: &str) -> Option<Vec<i64>> {
        let name = Self::key(section, key);
        match t.remove(key)? {
            Value::Array(items) => {
                let mut out = Vec::new();
                for v in items {
                    match v {
                        Value::Integer(i) => out.push(i),
                        other => {
                            self.errors.push(format!("`{name}` must hold integers, found {}", other.type_str()));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            other => {
                self.errors.push(format!("`{name}` must be an array, got {}", other.type_str()));
                None
            }
        }
    }

    fn section(&mut self, root: &mut Table, name: &str) -> Table {
        match root.remove(name) {
            None => Table::new(),
            Some(Value::Table(t)) => t,
            Some(other) => {
                self.errors.push(format!("`{name}` must be a table, got {}", other.type_str()));
                Table::new()
            }
        }
    }

    fn leftovers(&mut self, t: Table, section: &str) {
        for key in t.keys() {
            self.errors.push(format!("unknown key `{}`", Self::key(section, key)));
        }
    }

    fn positive(&mut self, name: &str, x: Option<f64>) {
        if let Some(x) = x {
            if !(x > 0.0 && x.is_finite()) {
                self.errors.push(format!("{name} must be positive, got {x}"));
            }
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut root: Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![format!("not valid TOML: {}", e.message())]))?;
    let mut w = Walker { errors: Vec::new() };

    let experiment = match w.string(&mut root, "", "experiment") {
        Some(s) => match s.parse::<Experiment>() {
            Ok(e) => Some(e),
            Err(msg) => {
                w.errors.push(msg);
                None
            }
        },
        None => {
            if !w.errors.iter().any(|e| e.contains("`experiment`")) {
                w.errors.push("missing required key `experiment`".into());
            }
            None
        }
    };
    let output_dir = w.string(&mut root, "", "output_dir").map(PathBuf::from);
    let seed = w.int(&mut root, "", "seed");
    if let Some(s) = seed {
        if s < 0 {
            w.errors.push(format!("seed must be non-negative, got {s}"));
        }
    }

    let mut t = w.section(&mut root, "model");
    let model = ModelBlock {
        gamma: w.float(&mut t, "model", "gamma"),
        a: w.float(&mut t, "model", "a"),
        n_bar: w.float(&mut t, "model", "n_bar"),
        epsilon: w.float(&mut t, "model", "epsilon"),
    };
    w.leftovers(t, "model");

    let mut t = w.section(&mut root, "grid");
    let dim = w.count(&mut t, "grid", "dim");
    let points = w.count(&mut t, "grid", "points");
    let length = w.float(&mut t, "grid", "length");
    let periods = w.float(&mut t, "grid", "periods");
    if length.is_some() && periods.is_some() {
        w.errors.push("give at most one of `grid.length` and `grid.periods`".into());
    }
    let grid = GridBlock { dim, points, length: length.or(periods.map(|p| 2.0 * PI * p)) };
    w.leftovers(t, "grid");

    let mut t = w.section(&mut root, "solver");
    let solver = SolverBlock {
        dt: w.float(&mut t, "solver", "dt"),
        t_end: w.float(&mut t, "solver", "t_end"),
        record_every: w.count(&mut t, "solver", "record_every"),
        record_interval: w.float(&mut t, "solver", "record_interval"),
        dealias: w.boolean(&mut t, "solver", "dealias"),
        poisson_tol: w.float(&mut t, "solver", "poisson_tol"),
        vacuum_margin: w.float(&mut t, "solver", "vacuum_margin"),
        dt_max: w.float(&mut t, "solver", "dt_max"),
        dt_per_epsilon: w.float(&mut t, "solver", "dt_per_epsilon"),
    };
    w.leftovers(t, "solver");

    let mut t = w.section(&mut root, "data");
    let data = DataBlock { width: w.float(&mut t, "data", "width"), amplitude: w.float(&mut t, "data", "amplitude") };
    w.leftovers(t, "data");

    let mut t = w.section(&mut root, "sweep");
    let sweep = SweepBlock {
        epsilons: w.floats(&mut t, "sweep", "epsilons"),
        snapshot_dt: w.float(&mut t, "sweep", "snapshot_dt"),
        besov_p: w.floats(&mut t, "sweep", "besov_p"),
    };
    w.leftovers(t, "sweep");

    let mut t = w.section(&mut root, "dispersive");
    let dispersive = DispersiveBlock {
        ks: w.ints(&mut t, "dispersive", "ks"),
        taus: w.floats(&mut t, "dispersive", "taus"),
        ts: w.floats(&mut t, "dispersive", "ts"),
    };
    w.leftovers(t, "dispersive");

    let mut t = w.section(&mut root, "strichartz");
    let strichartz = StrichartzBlock { blocks: w.ints(&mut t, "strichartz", "blocks") };
    w.leftovers(t, "strichartz");

    w.leftovers(root, "");

    // Semantic checks of everything that was readable.
    if let Err(v) = model.params() {
        w.errors.extend(v);
    }
    if grid.is_set() {
        if let Err(e) = grid.grid(TorusGrid::new(2, 128, 2.0 * PI).expect("valid grid")) {
            w.errors.push(e);
        }
    }
    for (name, x) in [
        ("solver.t_end", solver.t_end),
        ("solver.record_interval", solver.record_interval),
        ("solver.poisson_tol", solver.poisson_tol),
        ("solver.dt_per_epsilon", solver.dt_per_epsilon),
        ("data.width", data.width),
        ("data.amplitude", data.amplitude),
        ("sweep.snapshot_dt", sweep.snapshot_dt),
    ] {
        w.positive(name, x);
    }
    for (name, x) in [("solver.dt", solver.dt), ("solver.dt_max", solver.dt_max)] {
        if let Some(x) = x {
            if !(x > 0.0 && x <= 0.1) {
                w.errors.push(format!("{name} must lie in (0, 0.1], got {x}"));
            }
        }
    }
    if let Some(m) = solver.vacuum_margin {
        if !(0.0..1.0).contains(&m) {
            w.errors.push(format!("solver.vacuum_margin must lie in [0, 1), got {m}"));
        }
    }
    if solver.record_every == Some(0) {
        w.errors.push("solver.record_every must be at least 1".into());
    }
    if let Some(eps) = &sweep.epsilons {
        if eps.is_empty() {
            w.errors.push("sweep.epsilons must not be empty".into());
        }
        if eps.windows(2).any(|p| !(p[1] < p[0])) {
            w.errors.push(format!("sweep.epsilons must be strictly decreasing, got {eps:?}"));
        }
        for &e in eps {
            if !(e > 0.0 && e <= 1.0) {
                w.errors.push(format!("sweep.epsilons entries must lie in (0, 1], got {e}"));
            }
        }
    }
    if let Some(ps) = &sweep.besov_p {
        for &p in ps {
            if !(p >= 2.0) {
                w.errors.push(format!("sweep.besov_p entries must be >= 2, got {p}"));
            }
        }
    }
    for (name, list) in [("dispersive.taus", &dispersive.taus), ("dispersive.ts", &dispersive.ts)] {
        if let Some(list) = list {
            if list.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                w.errors.push(format!("{name} entries must be finite and >= 0, got {list:?}"));
            }
        }
    }
    if let Some(ks) = &dispersive.ks {
        if ks.iter().any(|k| k.abs() > 20) {
            w.errors.push(format!("dispersive.ks entries must lie in [-20, 20], got {ks:?}"));
        }
    }
    if let Some(b) = &strichartz.blocks {
        if b.iter().any(|k| !(0..=20).contains(k)) {
            w.errors.push(format!("strichartz.blocks entries must lie in [0, 20], got {b:?}"));
        }
    }
    if let (Some(e), Some(dt), Some(t_end)) = (experiment, solver.dt, solver.t_end) {
        if e == Experiment::SingleRun {
            let params = model.params().unwrap_or_default();
            let grid = grid.grid(default_single_grid()).unwrap_or_else(|_| default_single_grid());
            let mut cfg = SolverConfig::new(params, grid, dt, t_end);
            cfg.record_every = solver.record_every.unwrap_or(1).max(1);
            for v in cfg.violations() {
                if !w.errors.iter().any(|e| e.contains(&v)) && !v.starts_with("dt must") {
                    w.errors.push(format!("solver: {v}"));
                }
            }
        }
    }

    if !w.errors.is_empty() {
        return Err(ConfigErrors(w.errors));
    }
    Ok(RunConfig {
        experiment: experiment.expect("no errors"),
        model,
        grid,
        solver,
        data,
        sweep,
        dispersive,
        strichartz,
        output_dir: output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        seed: seed.map(|s| s as u64).unwrap_or(DEFAULT_SEED),
    })
}

/// Grid of `single-run` when none is given.
pub fn default_single_grid() -> TorusGrid {
    TorusGrid::new(2, 128, 2.0 * PI * 8.0).expect("valid grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_uses_defaults() {
        let c = parse_config("experiment = \"unit-suite\"").unwrap();
        assert_eq!(c.experiment, Experiment::UnitSuite);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.output_dir, PathBuf::from(DEFAULT_OUTPUT_DIR));
        assert_eq!(c.model.params().unwrap(), ModelParams::default());
    }

    #[test]
    fn every_problem_is_reported() {
        let doc = r#"
            experiment = "decay"
            colour = "blue"
            [model]
            gamma = 0.5
            epsilon = 2.0
            [grid]
            points = 100
            [sweep]
            epsilons = [0.1, 0.2]
            wobble = 1
        "#;
        let errs = parse_config(doc).unwrap_err().0;
        let has = |s: &str| errs.iter().any(|e| e.contains(s));
        assert!(has("unknown key `colour`"));
        assert!(has("unknown key `sweep.wobble`"));
        assert!(has("gamma must be >= 1"));
        assert!(has("epsilon must lie in (0, 1]"));
        assert!(has("power of two") || has("points"));
        assert!(has("strictly decreasing"));
        assert!(errs.len() >= 6, "{errs:?}");
    }

    #[test]
    fn missing_and_mistyped_keys() {
        let errs = parse_config("[model]\ngamma = 2.0").unwrap_err().0;
        assert_eq!(errs, vec!["missing required key `experiment`".to_string()]);
        let errs = parse_config("experiment = \"warp\"").unwrap_err().0;
        assert!(errs[0].contains("unknown experiment `warp`"));
        let errs = parse_config("experiment = \"decay\"\n[model]\ngamma = \"two\"").unwrap_err().0;
        assert!(errs[0].contains("`model.gamma` must be a number"));
    }

    #[test]
    fn periods_shorthand() {
        let c = parse_config("experiment = \"single-run\"\n[grid]\nperiods = 4").unwrap();
        assert!((c.grid.length.unwrap() - 8.0 * PI).abs() < 1e-15);
        assert!(parse_config("experiment = \"single-run\"\n[grid]\nperiods = 4\nlength = 3.0").is_err());
    }

    #[test]
    fn infinite_besov_exponent_is_accepted() {
        let c = parse_config("experiment = \"limit-sweep\"\n[sweep]\nbesov_p = [2, inf]").unwrap();
        assert_eq!(c.sweep.besov_p.unwrap(), vec![2.0, f64::INFINITY]);
    }

    #[test]
    fn single_run_schedule_is_checked() {
        let errs = parse_config("experiment = \"single-run\"\n[solver]\ndt = 0.03\nt_end = 1.0").unwrap_err().0;
        assert!(errs.iter().any(|e| e.contains("not a multiple")), "{errs:?}");
    }
}
