//! Separable N-dimensional complex FFT on top of `rustfft`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::TorusGrid;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(len: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(len)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(len), planner.plan_fft_inverse(len))
        })
        .clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// Unnormalized in-place transform of one scalar component laid out row-major.
pub(crate) fn transform_in_place(grid: &TorusGrid, data: &mut [Complex64], dir: Direction) {
    let m = grid.points();
    let dim = grid.dim();
    debug_assert_eq!(data.len(), grid.len());
    let (fwd, inv) = plans(m);
    let fft = match dir {
        Direction::Forward => fwd,
        Direction::Inverse => inv,
    };
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // last axis is contiguous: a single call handles every line
    fft.process_with_scratch(data, &mut scratch);

    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for axis in 0..dim.saturating_sub(1) {
        let stride = m.pow((dim - 1 - axis) as u32);
        let outer = m.pow(axis as u32);
        for o in 0..outer {
            let block = o * stride * m;
            for inner in 0..stride {
                let base = block + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, value) in line.iter().enumerate() {
                    data[base + j * stride] = *value;
                }
            }
        }
    }
}
