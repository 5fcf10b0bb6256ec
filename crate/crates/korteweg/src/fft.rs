//! Thin multi-dimensional wrapper around `rustfft` for row-major complex buffers.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

struct PlanCache {
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
    planner: FftPlanner<f64>,
}

fn cache() -> &'static Mutex<PlanCache> {
    static CACHE: OnceLock<Mutex<PlanCache>> = OnceLock::new();
    CACHE.get_or_init(|| {
        Mutex::new(PlanCache {
            forward: HashMap::new(),
            inverse: HashMap::new(),
            planner: FftPlanner::new(),
        })
    })
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut guard = cache().lock().expect("fft plan cache poisoned");
    let PlanCache {
        forward,
        inverse: inv,
        planner,
    } = &mut *guard;
    let map = if inverse { inv } else { forward };
    map.entry(len)
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// In-place 1-D transforms along contiguous rows of length `row_len`.
fn fft_rows(data: &mut [Complex64], row_len: usize, inverse: bool) {
    debug_assert_eq!(data.len() % row_len, 0);
    let fft = plan(row_len, inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(row_len) {
        fft.process_with_scratch(row, &mut scratch);
    }
}

fn transpose_square(data: &[Complex64], n: usize, out: &mut [Complex64]) {
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = data[i * n + j];
        }
    }
}

/// Unnormalized DFT of a row-major buffer with `shape.len()` axes of equal length.
///
/// Forward uses the e^{-i k x} convention; `inverse` undoes it up to a factor
/// of the total point count, which callers account for.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    match shape {
        [n] => {
            debug_assert_eq!(data.len(), *n);
            fft_rows(data, *n, inverse);
        }
        [n0, n1] => {
            debug_assert_eq!(*n0, *n1, "torus grids are isotropic");
            let n = *n0;
            debug_assert_eq!(data.len(), n * n);
            fft_rows(data, n, inverse);
            let mut scratch = vec![Complex64::default(); n * n];
            transpose_square(data, n, &mut scratch);
            fft_rows(&mut scratch, n, inverse);
            transpose_square(&scratch, n, data);
        }
        other => panic!("unsupported dimension {}", other.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let n = 8;
        let mut data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.7).cos()))
            .collect();
        let orig = data.clone();
        fft_nd(&mut data, &[n, n], false);
        fft_nd(&mut data, &[n, n], true);
        let scale = (n * n) as f64;
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / scale - b).norm() < 1e-13);
        }
    }

    #[test]
    fn forward_matches_direct_sum_1d() {
        let n = 8;
        let data: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(i as f64, -(i as f64) * 0.3))
            .collect();
        let mut transformed = data.clone();
        fft_nd(&mut transformed, &[n], false);
        for k in 0..n {
            let mut acc = Complex64::default();
            for (j, v) in data.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
                acc += v * Complex64::new(angle.cos(), angle.sin());
            }
            assert!((acc - transformed[k]).norm() < 1e-12);
        }
    }
}
