//! Space-time norms `‖U‖_{L¹_t L^p_x}` of sampled trajectories.

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

use super::propagator::{propagate_vars, AcousticVars, ModeTable};

/// Running trapezoidal sum of `‖U(t)‖_{L^p}` over a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StrichartzAccumulator {
    dt: f64,
    p: f64,
    sum: f64,
    last: Option<f64>,
    frames: usize,
}

impl StrichartzAccumulator {
    pub fn new(dt: f64, p: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        if !(p >= 2.0) {
            return Err(Error::Domain(format!("Strichartz exponent must lie in [2, inf], got {p}")));
        }
        Ok(Self { dt, p, sum: 0.0, last: None, frames: 0 })
    }

    pub fn push_norm(&mut self, norm: f64) {
        if let Some(prev) = self.last {
            self.sum += 0.5 * self.dt * (prev + norm);
        }
        self.last = Some(norm);
        self.frames += 1;
    }

    pub fn push(&mut self, frame: &SpectralField) {
        self.push_norm(frame.lp_norm(self.p));
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// `∫₀^T ‖U(t)‖_{L^p} dt` by the trapezoidal rule for frames spaced `dt` apart.
pub fn strichartz_norm(frames: &[SpectralField], dt: f64, p: f64) -> Result<f64> {
    let mut acc = StrichartzAccumulator::new(dt, p)?;
    for f in frames {
        acc.push(f);
    }
    Ok(acc.value())
}

/// `(m, d)` stacked as one two-component field.
pub fn acoustic_pair(u: &AcousticVars) -> SpectralField {
    SpectralField::stack(&[&u.m, &u.d]).expect("m and d share a grid")
}

/// Strichartz norm of the free acoustic evolution `(m, d)(t) = e^{tA}(m₀, d₀)`
/// sampled at `steps + 1` points spaced `dt` apart.
pub fn free_acoustic_norm(table: &ModeTable, u0: &AcousticVars, dt: f64, steps: usize, p: f64) -> Result<f64> {
    let mut acc = StrichartzAccumulator::new(dt, p)?;
    acc.push(&acoustic_pair(u0));
    let mut u = AcousticVars { pv: SpectralField::zeros(*u0.grid(), u0.grid().dim()), ..u0.clone() };
    for _ in 0..steps {
        u = propagate_vars(table, &u, dt);
        acc.push(&acoustic_pair(&u));
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plasma::ModelParams;
    use crate::spectral::TorusGrid;
    use std::f64::consts::PI;

    #[test]
    fn zero_trajectory() {
        let grid = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let frames = vec![SpectralField::zeros(grid, 2); 5];
        assert_eq!(strichartz_norm(&frames, 0.1, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn damped_mode_closed_form() {
        let grid = TorusGrid::new(2, 32, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(grid, 1, |x, _| x[0].sin() * (2.0 * x[1]).cos() + 0.3);
        let t_end = 3.0;
        let norm = |n: usize, p: f64| {
            let dt = t_end / n as f64;
            let frames: Vec<_> = (0..=n).map(|i| f.scaled((-(i as f64) * dt).exp())).collect();
            strichartz_norm(&frames, dt, p).unwrap()
        };
        for p in [2.0, 4.0, f64::INFINITY] {
            let exact = f.lp_norm(p) * (1.0 - (-t_end).exp());
            let coarse = norm(300, p);
            let fine = norm(600, p);
            // Trapezoid error ≈ dt²/12 · (1 - e^{-T}) relative.
            assert!((coarse - exact).abs() <= 2e-5 * exact, "p = {p}");
            assert!((fine - exact).abs() <= 0.3 * (coarse - exact).abs(), "p = {p}");
            assert!((fine - coarse).abs() <= 1e-3 * fine);
        }
    }

    #[test]
    fn free_acoustic_self_convergence() {
        let grid = TorusGrid::new(2, 32, 2.0 * PI).unwrap();
        let params = ModelParams::default().with_epsilon(0.1).unwrap();
        let table = ModeTable::new(grid, &params).unwrap();
        let m = SpectralField::from_fn(grid, 1, |x, _| (2.0 * x[0]).cos() + (x[0] + x[1]).sin());
        let v = SpectralField::zeros(grid, 2);
        let u0 = AcousticVars::from_mv(&m, &v).unwrap();
        let coarse = free_acoustic_norm(&table, &u0, 0.005, 1000, f64::INFINITY).unwrap();
        let fine = free_acoustic_norm(&table, &u0, 0.0025, 2000, f64::INFINITY).unwrap();
        assert!((coarse - fine).abs() <= 1e-3 * fine, "{coarse} vs {fine}");
    }

    #[test]
    fn bad_arguments() {
        assert!(StrichartzAccumulator::new(0.0, 2.0).is_err());
        assert!(StrichartzAccumulator::new(0.1, 1.5).is_err());
    }
}
