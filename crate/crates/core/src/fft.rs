//! Multidimensional FFT on row-major grids, built from cached 1-D plans.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, forward: bool) -> Plan {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((n, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

fn transform(grid: &Grid, data: &mut [Complex64], forward: bool) {
    let n = grid.n();
    let dim = grid.dim();
    debug_assert_eq!(data.len(), grid.len());
    let fft = plan(n, forward);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // Last axis is contiguous.
    fft.process_with_scratch(data, &mut scratch);

    let mut buffer = Vec::new();
    for axis in (0..dim.saturating_sub(1)).rev() {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = n * stride;
        buffer.resize(block, Complex64::new(0.0, 0.0));
        for chunk in data.chunks_exact_mut(block) {
            // transpose n x stride -> stride x n
            for j in 0..n {
                for s in 0..stride {
                    buffer[s * n + j] = chunk[j * stride + s];
                }
            }
            fft.process_with_scratch(&mut buffer, &mut scratch);
            for j in 0..n {
                for s in 0..stride {
                    chunk[j * stride + s] = buffer[s * n + j];
                }
            }
        }
    }

    if !forward {
        let scale = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Unnormalized forward transform, in place.
pub(crate) fn forward(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, true);
}

/// Inverse transform including the `1/N` factor, in place.
pub(crate) fn inverse(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, false);
}
