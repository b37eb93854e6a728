//! Dyadic frequency decomposition, Besov norms and related estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{divergence, gradient, SpectralField, TorusGrid};

/// `C^∞` step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    fn f(t: f64) -> f64 {
        if t > 0.0 {
            (-1.0 / t).exp()
        } else {
            0.0
        }
    }
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = f(t);
        a / (a + f(1.0 - t))
    }
}

/// Radial pair `(χ, φ)` with `χ = 1` on `|ξ| ≤ inner`, `χ = 0` on
/// `|ξ| ≥ outer` and `φ(ξ) = χ(ξ/2) - χ(ξ)`.
///
/// The telescoping construction makes `χ(ξ) + Σ_{q≥0} φ(2^{-q}ξ) = 1` hold up
/// to rounding. `outer ≤ 2·inner` keeps blocks two apart disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicPartition {
    inner: f64,
    outer: f64,
}

impl Default for DyadicPartition {
    fn default() -> Self {
        Self { inner: 0.75, outer: 4.0 / 3.0 }
    }
}

impl DyadicPartition {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && outer <= 2.0 * inner) {
            return Err(Error::Config(format!(
                "partition radii must satisfy 0 < inner < outer <= 2 inner, got ({inner}, {outer})"
            )));
        }
        Ok(Self { inner, outer })
    }

    /// A second admissible partition used to compare Besov norms.
    pub fn alternate() -> Self {
        Self { inner: 0.85, outer: 1.25 }
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn chi(&self, r: f64) -> f64 {
        1.0 - smooth_step((r - self.inner) / (self.outer - self.inner))
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.chi(r / 2.0) - self.chi(r)
    }

    /// Symbol of `Δ_q`, `q ≥ -1`.
    pub fn block_symbol(&self, q: i32, r: f64) -> f64 {
        if q == -1 {
            self.chi(r)
        } else {
            self.phi(r * 2f64.powi(-q))
        }
    }

    /// Symbol of `S_q = Σ_{p ≤ q-1} Δ_p`.
    pub fn low_symbol(&self, q: i32, r: f64) -> f64 {
        if q <= -1 {
            0.0
        } else {
            self.chi(r * 2f64.powi(-q))
        }
    }

    /// Largest `q` whose block can be nonzero on the grid.
    pub fn top_block(&self, grid: &TorusGrid) -> i32 {
        let rmax = grid.max_frequency();
        let mut q = -1;
        while self.inner * 2f64.powi(q + 1) <= rmax {
            q += 1;
        }
        q
    }

    /// Range of homogeneous indices `k` whose blocks can be nonzero.
    pub fn homogeneous_range(&self, grid: &TorusGrid) -> (i32, i32) {
        let rmin = grid.frequency_step();
        let rmax = grid.max_frequency();
        let mut lo = 0;
        while 2.0 * self.outer * 2f64.powi(lo - 1) > rmin {
            lo -= 1;
        }
        let mut hi = 0;
        while self.inner * 2f64.powi(hi + 1) <= rmax {
            hi += 1;
        }
        (lo, hi)
    }
}

fn radial_multiplier<S: Fn(f64) -> f64>(f: &SpectralField, symbol: S) -> SpectralField {
    let grid = *f.grid();
    let weights: Vec<f64> = (0..grid.len()).map(|k| symbol(grid.frequency_norm(k))).collect();
    let mut out = f.clone();
    for c in 0..f.components() {
        for (coef, w) in out.component_mut(c).iter_mut().zip(&weights) {
            *coef *= *w;
        }
    }
    out
}

/// `Δ_q f`
pub fn block(f: &SpectralField, partition: &DyadicPartition, q: i32) -> Result<SpectralField> {
    if q < -1 {
        return Err(Error::Domain(format!("nonhomogeneous block index must be >= -1, got {q}")));
    }
    Ok(radial_multiplier(f, |r| partition.block_symbol(q, r)))
}

/// `Δ̇_k f`; the zero frequency is annihilated.
pub fn homogeneous_block(f: &SpectralField, partition: &DyadicPartition, k: i32) -> SpectralField {
    let scale = 2f64.powi(-k);
    radial_multiplier(f, |r| if r == 0.0 { 0.0 } else { partition.phi(r * scale) })
}

/// `S_q f`
pub fn low_cutoff(f: &SpectralField, partition: &DyadicPartition, q: i32) -> SpectralField {
    radial_multiplier(f, |r| partition.low_symbol(q, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Summation {
    One,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub r: Summation,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, r: Summation) -> Result<Self> {
        if !(p >= 2.0) {
            return Err(Error::Config(format!("Besov integrability p must be >= 2, got {p}")));
        }
        Ok(Self { s, p, r })
    }

    /// `B^σ_{2,1}` with `σ = 1 + N/2`.
    pub fn critical(dim: usize) -> Self {
        Self { s: 1.0 + dim as f64 / 2.0, p: 2.0, r: Summation::One }
    }
}

/// `‖Δ_q f‖_{L^p}` for every `q` from -1 to the top grid block.
pub fn block_norms(f: &SpectralField, partition: &DyadicPartition, p: f64) -> Vec<f64> {
    let grid = *f.grid();
    let top = partition.top_block(&grid);
    if p == 2.0 {
        // Parseval per block, no transforms needed
        let radii: Vec<f64> = (0..grid.len()).map(|k| grid.frequency_norm(k)).collect();
        let power: Vec<f64> = (0..grid.len())
            .map(|k| (0..f.components()).map(|c| f.component(c)[k].norm_sqr()).sum())
            .collect();
        (-1..=top)
            .map(|q| {
                let sum: f64 = radii
                    .iter()
                    .zip(&power)
                    .filter(|(_, p)| **p != 0.0)
                    .map(|(r, p)| partition.block_symbol(q, *r).powi(2) * p)
                    .sum();
                (grid.volume() * sum).sqrt()
            })
            .collect()
    } else {
        (-1..=top)
            .map(|q| block(f, partition, q).expect("q >= -1").lp_norm(p))
            .collect()
    }
}

pub fn besov_norm_with(f: &SpectralField, params: &BesovParams, partition: &DyadicPartition) -> f64 {
    let norms = block_norms(f, partition, params.p);
    let weighted = norms
        .iter()
        .enumerate()
        .map(|(i, n)| 2f64.powf((i as f64 - 1.0) * params.s) * n);
    match params.r {
        Summation::One => weighted.sum(),
        Summation::Infinity => weighted.fold(0.0, f64::max),
    }
}

/// Besov norm with the default partition.
pub fn besov_norm(f: &SpectralField, params: &BesovParams) -> f64 {
    besov_norm_with(f, params, &DyadicPartition::default())
}

/// Sum of the Besov norms of several fields (the norm of a tuple).
pub fn besov_norm_tuple(parts: &[&SpectralField], params: &BesovParams) -> f64 {
    parts.iter().map(|f| besov_norm(f, params)).sum()
}

/// Sharp radial frequency cutoffs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band {
    AtMost(f64),
    AtLeast(f64),
    Between(f64, f64),
}

pub fn band_project(f: &SpectralField, band: Band) -> Result<SpectralField> {
    let ok = match band {
        Band::AtMost(r) | Band::AtLeast(r) => r > 0.0,
        Band::Between(a, b) => a > 0.0 && b >= a,
    };
    if !ok {
        return Err(Error::Config(format!("invalid band thresholds {band:?}")));
    }
    Ok(radial_multiplier(f, |r| {
        let inside = match band {
            Band::AtMost(m) => r <= m,
            Band::AtLeast(m) => r >= m,
            Band::Between(a, b) => a <= r && r <= b,
        };
        if inside {
            1.0
        } else {
            0.0
        }
    }))
}

/// `sup_{|α|=k} ‖∂^α f‖_{L²} / (2^{qk}‖f‖_{L²})`.
pub fn bernstein_ratio(f: &SpectralField, q: i32, k: u32) -> Result<f64> {
    let base = f.l2_norm();
    if base == 0.0 {
        return Err(Error::Domain("Bernstein ratio of a field with empty spectrum".into()));
    }
    let grid = *f.grid();
    let dim = grid.dim();
    let mut best: f64 = 0.0;
    for alpha in multi_indices(dim, k) {
        let mut sum = 0.0;
        for kk in 0..grid.len() {
            let xi = grid.frequency(kk);
            let w: f64 = (0..dim).map(|a| xi[a].powi(alpha[a] as i32)).product();
            let w2 = w * w;
            if w2 == 0.0 {
                continue;
            }
            for c in 0..f.components() {
                sum += w2 * f.component(c)[kk].norm_sqr();
            }
        }
        best = best.max((grid.volume() * sum).sqrt());
    }
    Ok(best / (2f64.powi(q * k as i32) * base))
}

fn multi_indices(dim: usize, k: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in 0..=k {
        for b in 0..=k - a {
            let c = k - a - b;
            let idx = [a, b, c];
            if idx[dim..].iter().all(|&x| x == 0) {
                out.push(idx);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutatorOp {
    Divergence,
    Gradient,
}

/// One sample of the commutator estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorSample {
    /// `2^{qs}‖[f, Δ_q]A g‖_{L²}` with `s = 1 + N/2`
    pub lhs: f64,
    /// `‖f‖_{B^s_{2,1}}‖g‖_{B^s_{2,1}}`
    pub rhs: f64,
}

impl CommutatorSample {
    pub fn ratio(&self) -> f64 {
        if self.rhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

fn multiply_scalar(f: &[f64], g: &SpectralField) -> SpectralField {
    let n = g.grid().len();
    let mut samples = g.to_physical();
    for c in 0..g.components() {
        for k in 0..n {
            samples[c * n + k] *= f[k];
        }
    }
    SpectralField::from_physical(*g.grid(), g.components(), &samples).expect("shape preserved")
}

/// `[f, Δ_q]A g = f Δ_q(Ag) - Δ_q(f Ag)` for scalar `f`; `A = div` takes a
/// vector `g`, `A = ∇` a scalar one.
pub fn commutator(f: &SpectralField, g: &SpectralField, q: i32, op: CommutatorOp) -> Result<SpectralField> {
    if f.components() != 1 {
        return Err(Error::Config("commutator multiplier must be scalar".into()));
    }
    let partition = DyadicPartition::default();
    let ag = match op {
        CommutatorOp::Divergence => divergence(g)?,
        CommutatorOp::Gradient => gradient(g)?,
    };
    let fp = f.to_physical();
    let left = multiply_scalar(&fp, &block(&ag, &partition, q)?);
    let right = block(&multiply_scalar(&fp, &ag), &partition, q)?;
    Ok(left.sub(&right))
}

pub fn commutator_check(f: &SpectralField, g: &SpectralField, q: i32, op: CommutatorOp) -> Result<CommutatorSample> {
    let dim = f.grid().dim();
    let params = BesovParams::critical(dim);
    let c = commutator(f, g, q, op)?;
    Ok(CommutatorSample {
        lhs: 2f64.powf(q as f64 * params.s) * c.l2_norm(),
        rhs: besov_norm(f, &params) * besov_norm(g, &params),
    })
}

/// Right-hand side of the diagonal (`f = g`) estimate: `‖∇f‖_{L^∞}‖f‖_{B^s_{2,1}}`.
pub fn commutator_diagonal_bound(f: &SpectralField) -> Result<f64> {
    let params = BesovParams::critical(f.grid().dim());
    Ok(gradient(f)?.lp_norm(f64::INFINITY) * besov_norm(f, &params))
}

/// Adds the blocks back together; used to check reconstruction.
pub fn reconstruct(f: &SpectralField, partition: &DyadicPartition) -> SpectralField {
    let grid = *f.grid();
    let mut out = SpectralField::zeros(grid, f.components());
    for q in -1..=partition.top_block(&grid) {
        out.axpy(1.0, &block(f, partition, q).expect("q >= -1"));
    }
    out
}
