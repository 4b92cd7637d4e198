//! Synthetic ground truth and sampling, so solver correctness and parameter
//! recovery are testable on data with a known generator.
//!
//! Rows are drawn as `x ~ N(0, Σ_x)` and `y | x ~ N(-Λ⁻¹Θ'x, (2Λ)⁻¹)`, the
//! conditional implied by the model exponent `-y'Λy - 2x'Θy`. Note the
//! exponent carries no 1/2 factor, so the maximum-likelihood fit identifies
//! the generator's parameters up to a factor of two; [`GroundTruth::mle_target`]
//! returns the pair the fit actually converges to.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Dataset, ModelParams};

/// A generating model plus the input covariance and the seed it was built from.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub params: ModelParams,
    pub sigma_x: DMatrix<f64>,
    pub seed: u64,
}

impl GroundTruth {
    /// Parameters the maximum-likelihood fit converges to as the sample
    /// count grows: `(2Λ, 2Θ)`. Recovery error should be measured against
    /// this pair, not the raw generator parameters.
    pub fn mle_target(&self) -> ModelParams {
        ModelParams::new_unchecked(self.params.lambda() * 2.0, self.params.theta() * 2.0)
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; 1 - u keeps the log argument strictly positive
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Draws a random ground truth with a well-conditioned Λ.
///
/// Λ = A + (diag_dominance + r)·I, where A is symmetric with entries uniform
/// in [-1, 1] and r shifts the spectrum so the minimum eigenvalue of A + r·I
/// is at least 0.1. Each Θ entry is nonzero with probability `theta_density`
/// (values uniform in [-1, 1]). The input covariance defaults to identity.
/// Deterministic in `seed`.
pub fn sample_ground_truth(
    n: usize,
    p: usize,
    diag_dominance: f64,
    theta_density: f64,
    seed: u64,
) -> Result<GroundTruth> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidConfig("n and p must be at least 1".into()));
    }
    if diag_dominance < 0.0 {
        return Err(Error::InvalidConfig(
            "diag_dominance must be nonnegative".into(),
        ));
    }
    if !(theta_density > 0.0 && theta_density <= 1.0) {
        return Err(Error::InvalidConfig(
            "theta_density must lie in (0, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut a = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = rng.random_range(-1.0..=1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let min_eig = a
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let shift = if min_eig < 0.1 { 0.1 - min_eig } else { 0.0 };
    let lambda = a + DMatrix::identity(p, p) * (diag_dominance + shift);

    let mut theta = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            if rng.random::<f64>() < theta_density {
                theta[(i, j)] = rng.random_range(-1.0..=1.0);
            }
        }
    }

    Ok(GroundTruth {
        params: ModelParams::new(lambda, theta)?,
        sigma_x: DMatrix::identity(n, n),
        seed,
    })
}

/// Draws `m` paired samples from the ground truth, deterministic in `seed`.
pub fn sample_dataset(gt: &GroundTruth, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    let n = gt.params.input_dim();
    let p = gt.params.output_dim();
    let chol_x = Cholesky::new(gt.sigma_x.clone()).ok_or(Error::NotPositiveDefinite)?;
    let l_x = chol_x.l();
    let chol_2l = Cholesky::new(gt.params.lambda() * 2.0).ok_or(Error::NotPositiveDefinite)?;
    // (2Λ)⁻¹ = L⁻ᵀ L⁻¹, so mean + L⁻ᵀ w has the right noise covariance
    let l_2l_t = chol_2l.l().transpose();
    // mean map: x ↦ -Λ⁻¹ Θ' x
    let chol_l = Cholesky::new(gt.params.lambda().clone()).ok_or(Error::NotPositiveDefinite)?;
    let mean_map = -chol_l.solve(&gt.params.theta().transpose());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(m, n);
    let mut y = DMatrix::zeros(m, p);
    for row in 0..m {
        let zx = DVector::from_fn(n, |_, _| standard_normal(&mut rng));
        let xi = &l_x * zx;
        let zy = DVector::from_fn(p, |_, _| standard_normal(&mut rng));
        let noise = l_2l_t
            .solve_upper_triangular(&zy)
            .ok_or(Error::NotPositiveDefinite)?;
        let yi = &mean_map * &xi + noise;
        x.row_mut(row).copy_from(&xi.transpose());
        y.row_mut(row).copy_from(&yi.transpose());
    }
    Dataset::new(x, y)
}

/// Relative Frobenius errors per parameter block and the support F1 of Θ
/// (nonzero pattern at threshold 1e-3).
#[derive(Clone, Copy, Debug)]
pub struct RecoveryReport {
    pub rel_frobenius_lambda: f64,
    pub rel_frobenius_theta: f64,
    pub support_f1_theta: f64,
}

const SUPPORT_THRESHOLD: f64 = 1e-3;

fn rel_frobenius(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let denom = truth.norm();
    if denom == 0.0 {
        if estimate.norm() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (estimate - truth).norm() / denom
    }
}

pub fn recovery_error(truth: &ModelParams, estimate: &ModelParams) -> Result<RecoveryReport> {
    if truth.input_dim() != estimate.input_dim() || truth.output_dim() != estimate.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "truth is n={}, p={} but estimate is n={}, p={}",
            truth.input_dim(),
            truth.output_dim(),
            estimate.input_dim(),
            estimate.output_dim()
        )));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (t, e) in truth.theta().iter().zip(estimate.theta().iter()) {
        let t_on = t.abs() > SUPPORT_THRESHOLD;
        let e_on = e.abs() > SUPPORT_THRESHOLD;
        match (t_on, e_on) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    let support_f1_theta = if tp + fp + fn_ == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fn_ as f64)
    };
    Ok(RecoveryReport {
        rel_frobenius_lambda: rel_frobenius(estimate.lambda(), truth.lambda()),
        rel_frobenius_theta: rel_frobenius(estimate.theta(), truth.theta()),
        support_f1_theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::compute_stats;

    #[test]
    fn ground_truth_is_deterministic_in_seed() {
        let a = sample_ground_truth(4, 3, 0.5, 0.7, 42).unwrap();
        let b = sample_ground_truth(4, 3, 0.5, 0.7, 42).unwrap();
        assert_eq!(a.params.lambda(), b.params.lambda());
        assert_eq!(a.params.theta(), b.params.theta());
    }

    #[test]
    fn theta_density_bounds() {
        let dense = sample_ground_truth(5, 4, 0.5, 1.0, 7).unwrap();
        assert!(dense.params.theta().iter().all(|v| *v != 0.0));
        // density 1/(n*p): at most a few nonzeros
        let sparse = sample_ground_truth(5, 4, 0.5, 1.0 / 20.0, 7).unwrap();
        let nonzeros = sparse.params.theta().iter().filter(|v| **v != 0.0).count();
        assert!(
            nonzeros <= 5,
            "expected a nearly empty theta, got {nonzeros}"
        );
    }

    #[test]
    fn lambda_min_eigenvalue_floor_holds_across_seeds() {
        for seed in 0..100 {
            let gt = sample_ground_truth(6, 6, 0.0, 0.5, seed).unwrap();
            let min_eig = gt
                .params
                .lambda()
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min_eig >= 0.1 - 1e-12, "seed {seed}: min eig {min_eig}");
        }
    }

    #[test]
    fn dataset_is_deterministic_in_seed() {
        let gt = sample_ground_truth(3, 2, 1.0, 0.5, 1).unwrap();
        let a = sample_dataset(&gt, 20, 9).unwrap();
        let b = sample_dataset(&gt, 20, 9).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.y(), b.y());
    }

    #[test]
    fn output_variance_matches_noise_covariance() {
        // Θ = 0, Λ = I: each y column has variance (2·1)⁻¹ = 0.5
        let gt = GroundTruth {
            params: ModelParams::identity_init(2, 3),
            sigma_x: DMatrix::identity(2, 2),
            seed: 0,
        };
        let data = sample_dataset(&gt, 100_000, 11).unwrap();
        let stats = compute_stats(&data).unwrap();
        for j in 0..3 {
            let var = stats.s_yy()[(j, j)];
            assert!((var - 0.5).abs() < 0.025, "column {j} variance {var}");
        }
    }

    #[test]
    fn prediction_residual_variance_matches_noise_trace() {
        // predicting with the generator's own parameters leaves pure noise,
        // whose mean squared magnitude per channel is tr((2Λ)⁻¹)/p
        let gt = sample_ground_truth(3, 2, 1.0, 0.8, 17).unwrap();
        let m = 100_000;
        let data = sample_dataset(&gt, m, 19).unwrap();
        let chol = Cholesky::new(gt.params.lambda() * 2.0).unwrap();
        let expected = chol.inverse().trace() / gt.params.output_dim() as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let x = data.x().row(i).transpose();
            let y_hat = crate::model::predict(&gt.params, &x).unwrap();
            acc += (data.y().row(i).transpose() - y_hat).norm_squared();
        }
        let msr = acc / (m * gt.params.output_dim()) as f64;
        assert!(
            (msr - expected).abs() / expected < 0.05,
            "mean squared residual {msr} vs {expected}"
        );
    }

    #[test]
    fn empirical_input_covariance_approaches_sigma_x() {
        let gt = sample_ground_truth(3, 2, 1.0, 0.5, 5).unwrap();
        let data = sample_dataset(&gt, 100_000, 13).unwrap();
        let stats = compute_stats(&data).unwrap();
        let err = (stats.s_xx() - &gt.sigma_x).amax();
        assert!(err < 0.05, "max deviation {err}");
    }

    #[test]
    fn recovery_report_identity() {
        let gt = sample_ground_truth(3, 2, 1.0, 0.5, 3).unwrap();
        let rep = recovery_error(&gt.params, &gt.params).unwrap();
        assert_eq!(rep.rel_frobenius_lambda, 0.0);
        assert_eq!(rep.rel_frobenius_theta, 0.0);
        assert_eq!(rep.support_f1_theta, 1.0);
    }

    #[test]
    fn recovery_report_doubled_estimate() {
        let gt = sample_ground_truth(3, 2, 1.0, 1.0, 3).unwrap();
        let doubled = ModelParams::new(gt.params.lambda() * 2.0, gt.params.theta() * 2.0).unwrap();
        let rep = recovery_error(&gt.params, &doubled).unwrap();
        assert!((rep.rel_frobenius_lambda - 1.0).abs() < 1e-12);
        assert!((rep.rel_frobenius_theta - 1.0).abs() < 1e-12);
        assert_eq!(rep.support_f1_theta, 1.0);
    }

    #[test]
    fn recovery_report_zero_estimate() {
        let gt = sample_ground_truth(3, 2, 1.0, 1.0, 3).unwrap();
        let zero = ModelParams::identity_init(3, 2);
        let rep = recovery_error(&gt.params, &zero).unwrap();
        assert!((rep.rel_frobenius_theta - 1.0).abs() < 1e-12);
        assert_eq!(rep.support_f1_theta, 0.0);
    }

    #[test]
    fn recovery_rejects_dimension_mismatch() {
        let a = sample_ground_truth(3, 2, 1.0, 0.5, 3).unwrap();
        let b = sample_ground_truth(2, 2, 1.0, 0.5, 3).unwrap();
        assert!(recovery_error(&a.params, &b.params).is_err());
    }
}
