//! Shared helpers for the integration suites: seeded instance builders and
//! a central finite-difference oracle kept independent of the library's
//! analytic gradient path.

#![allow(dead_code)]

use gcrf::datagen::{sample_dataset, sample_ground_truth};
use gcrf::{compute_stats, ModelParams, SufficientStats};
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dims in 1..=max_dim, nondegenerate stats from sampled data and a
/// feasible parameter point with a comfortable positive-definiteness margin.
pub fn random_instance(seed: u64, max_dim: usize) -> (SufficientStats, ModelParams) {
    let mut r = rng(seed);
    let n = r.random_range(1..=max_dim);
    let p = r.random_range(1..=max_dim);
    let gt = sample_ground_truth(n, p, 1.0, 0.8, seed.wrapping_add(101)).unwrap();
    let data = sample_dataset(&gt, 40 + 10 * n.max(p), seed.wrapping_add(202)).unwrap();
    let stats = compute_stats(&data).unwrap();
    // an off-optimum feasible point, distinct from the generator
    let point = sample_ground_truth(n, p, 1.0, 1.0, seed.wrapping_add(303))
        .unwrap()
        .params;
    (stats, point)
}

pub fn random_symmetric(k: usize, seed: u64, scale: f64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = r.random_range(-scale..=scale);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Central finite differences in an unconstrained matrix argument.
pub fn fd_grad(f: &dyn Fn(&DMatrix<f64>) -> f64, at: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(at.nrows(), at.ncols());
    for i in 0..at.nrows() {
        for j in 0..at.ncols() {
            let mut plus = at.clone();
            plus[(i, j)] += h;
            let mut minus = at.clone();
            minus[(i, j)] -= h;
            g[(i, j)] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
    }
    g
}

/// Central finite differences in a symmetric matrix argument.
///
/// Perturbs (i, j) and (j, i) together so every probe stays inside the
/// symmetric domain; the measured directional derivative is then `g_ii` on
/// the diagonal and `2 g_ij` off it, which this helper converts back to the
/// per-entry gradient.
pub fn fd_grad_symmetric(
    f: &dyn Fn(&DMatrix<f64>) -> f64,
    at: &DMatrix<f64>,
    h: f64,
) -> DMatrix<f64> {
    let k = at.nrows();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let mut plus = at.clone();
            let mut minus = at.clone();
            plus[(i, j)] += h;
            minus[(i, j)] -= h;
            if i != j {
                plus[(j, i)] += h;
                minus[(j, i)] -= h;
            }
            let d = (f(&plus) - f(&minus)) / (2.0 * h);
            let entry = if i == j { d } else { d / 2.0 };
            g[(i, j)] = entry;
            g[(j, i)] = entry;
        }
    }
    g
}

/// Worst relative deviation, with a unit floor on the denominator so
/// near-zero entries compare absolutely.
pub fn max_rel_err(measured: &DMatrix<f64>, analytic: &DMatrix<f64>) -> f64 {
    measured
        .iter()
        .zip(analytic.iter())
        .map(|(m, a)| (m - a).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max)
}
