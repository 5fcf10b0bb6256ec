//! Shared test support: the brute-force matrix-exponential oracle and random
//! field corpora. Everything here is independent of the per-mode propagator
//! formulas it is used to check.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use korteweg::semigroup::LinearParams;
use korteweg::spectral::{SpectralField, TorusGrid};

pub type CMat = Vec<Vec<Complex64>>;

pub fn mat_zero(n: usize) -> CMat {
    vec![vec![Complex64::default(); n]; n]
}

pub fn mat_identity(n: usize) -> CMat {
    let mut m = mat_zero(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn mat_mul(a: &CMat, b: &CMat) -> CMat {
    let n = a.len();
    let mut out = mat_zero(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn mat_scale(a: &CMat, s: f64) -> CMat {
    a.iter()
        .map(|row| row.iter().map(|v| v * s).collect())
        .collect()
}

fn mat_add(a: &CMat, b: &CMat) -> CMat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

fn mat_norm(a: &CMat) -> f64 {
    a.iter()
        .map(|row| row.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

/// Brute-force matrix exponential by scaling-and-squaring with a Taylor
/// series driven to machine precision.
pub fn matexp(a: &CMat) -> CMat {
    let n = a.len();
    let norm = mat_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = mat_scale(a, 0.5_f64.powi(squarings as i32));
    let mut sum = mat_identity(n);
    let mut term = mat_identity(n);
    for k in 1..200 {
        term = mat_mul(&term, &scaled);
        term = mat_scale(&term, 1.0 / k as f64);
        sum = mat_add(&sum, &term);
        if mat_norm(&term) < 1e-22 {
            break;
        }
    }
    let mut result = sum;
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

pub fn mat_apply(a: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(m, x)| m * x).sum())
        .collect()
}

/// The generator of the coupled (qhat, div-m-hat) pair at one mode:
/// d/dt u = -A u with A = [[c|xi|^2, 1], [-beta|xi|^2, nu|xi|^2]].
pub fn coupled_generator(xi_sq: f64, p: &LinearParams) -> CMat {
    vec![
        vec![Complex64::new(p.c * xi_sq, 0.0), Complex64::new(1.0, 0.0)],
        vec![
            Complex64::new(-p.beta * xi_sq, 0.0),
            Complex64::new(p.nu() * xi_sq, 0.0),
        ],
    ]
}

/// Oracle propagator e^{-tA(xi)} for one mode.
pub fn coupled_matexp(xi_sq: f64, t: f64, p: &LinearParams) -> CMat {
    matexp(&mat_scale(&coupled_generator(xi_sq, p), -t))
}

pub fn grid_2d(n: usize) -> TorusGrid {
    TorusGrid::new(2, n, std::f64::consts::TAU).unwrap()
}

pub fn grid_1d(n: usize) -> TorusGrid {
    TorusGrid::new(1, n, std::f64::consts::TAU).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// White-noise real field with the Nyquist modes cleared.
pub fn random_field(grid: TorusGrid, components: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let total = grid.total_points();
    let samples: Vec<f64> = (0..components * total)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    SpectralField::from_physical(grid, components, &samples)
        .unwrap()
        .scale_modes(1.0, |_| 1.0)
}

/// Smooth random field: white noise damped by a spectral Gaussian.
pub fn random_smooth(grid: TorusGrid, components: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let tau = (grid.side_length() / 16.0).powi(2);
    random_field(grid, components, rng).scale_modes(1.0, |xi_sq| (-tau * xi_sq).exp())
}

pub fn random_mean_free_smooth(
    grid: TorusGrid,
    components: usize,
    rng: &mut ChaCha8Rng,
) -> SpectralField {
    random_smooth(grid, components, rng).homogeneous_part()
}

pub fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: got {actual}, expected {expected} (tol {tol})"
    );
}

pub fn assert_rel(actual: f64, expected: f64, rel: f64, what: &str) {
    let denom = expected.abs().max(1e-300);
    assert!(
        (actual - expected).abs() / denom <= rel,
        "{what}: got {actual}, expected {expected} (rel {rel})"
    );
}

/// Max physical-sample difference between two fields on one grid.
pub fn max_phys_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.to_physical()
        .iter()
        .zip(b.to_physical().iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max)
}
