use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[0, L)^N` with `M` points per axis.
///
/// Mode index `j` along an axis is stored in FFT order (`0, 1, …, M/2-1,
/// -M/2, …, -1`) and carries the frequency `2πj/L`. The Nyquist index
/// `-M/2` is its own conjugate partner, so its frequency component is taken
/// as zero; with that convention `ξ(-k) = -ξ(k)` holds for every mode and any
/// symbol with `a(-ξ) = conj(a(ξ))` maps real fields to real fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    points: usize,
    length: f64,
}

impl TorusGrid {
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::Config(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Config(format!("side length must be positive, got {length}")));
        }
        Ok(Self { dim, points, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of grid points (and Fourier modes).
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `L^N`
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// `(L/M)^N`
    pub fn cell_volume(&self) -> f64 {
        (self.length / self.points as f64).powi(self.dim as i32)
    }

    /// `2π/L`, the spacing of the frequency lattice.
    pub fn frequency_step(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Signed mode index of storage position `i` along one axis.
    pub fn signed_index(&self, i: usize) -> i64 {
        let m = self.points as i64;
        let i = i as i64;
        if i < m / 2 {
            i
        } else {
            i - m
        }
    }

    /// Storage position along one axis of signed mode index `j`.
    pub fn storage_index(&self, j: i64) -> usize {
        j.rem_euclid(self.points as i64) as usize
    }

    /// Per-axis storage positions of a flat index (axis 0 slowest).
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rest % self.points;
            rest /= self.points;
        }
        out
    }

    pub fn ravel(&self, idx: [usize; 3]) -> usize {
        idx[..self.dim]
            .iter()
            .fold(0usize, |acc, &i| acc * self.points + i)
    }

    /// Signed mode multi-index of a flat index; unused axes are zero.
    pub fn mode_index(&self, flat: usize) -> [i64; 3] {
        let pos = self.unravel(flat);
        let mut out = [0i64; 3];
        for axis in 0..self.dim {
            out[axis] = self.signed_index(pos[axis]);
        }
        out
    }

    /// Flat index of the mode with the given signed multi-index.
    pub fn flat_of_mode(&self, mode: [i64; 3]) -> usize {
        let mut pos = [0usize; 3];
        for axis in 0..self.dim {
            pos[axis] = self.storage_index(mode[axis]);
        }
        self.ravel(pos)
    }

    pub fn is_nyquist(&self, flat: usize) -> bool {
        let half = (self.points / 2) as i64;
        self.mode_index(flat)[..self.dim].iter().any(|&j| j == -half)
    }

    /// Frequency vector of a mode (Nyquist components set to zero).
    pub fn frequency(&self, flat: usize) -> [f64; 3] {
        let half = (self.points / 2) as i64;
        let step = self.frequency_step();
        let mode = self.mode_index(flat);
        let mut xi = [0.0; 3];
        for axis in 0..self.dim {
            if mode[axis] != -half {
                xi[axis] = step * mode[axis] as f64;
            }
        }
        xi
    }

    pub fn frequency_norm(&self, flat: usize) -> f64 {
        norm3(&self.frequency(flat))
    }

    /// Largest `|ξ|` over the grid.
    pub fn max_frequency(&self) -> f64 {
        let jmax = (self.points / 2 - 1) as f64;
        self.frequency_step() * jmax * (self.dim as f64).sqrt()
    }

    /// Flat index of the conjugate partner mode `-k`.
    pub fn partner(&self, flat: usize) -> usize {
        let mode = self.mode_index(flat);
        self.flat_of_mode([-mode[0], -mode[1], -mode[2]])
    }

    /// Physical coordinates of grid point `flat`.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let h = self.length / self.points as f64;
        let pos = self.unravel(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = h * pos[axis] as f64;
        }
        x
    }

    /// Precomputed frequency vectors for every mode.
    pub fn frequency_table(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|k| self.frequency(k)).collect()
    }
}

pub(crate) fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}
