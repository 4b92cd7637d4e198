//! Solver configuration, fit traces and the shared safeguarded line search.

pub mod admm;
pub mod gd;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Upper bound on backtracking halvings before a step is declared stalled.
pub const MAX_BACKTRACKS: usize = 60;

/// Tunables shared by both solvers. The penalty-schedule constants
/// (`mu0`, `beta`, `mu_max`) and the residual tolerances only affect the
/// ADMM solver.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Terminate when the joint gradient Frobenius norm falls below
    /// `grad_tol * (1 + |f|)`; the ADMM solver uses it as the relative
    /// objective-change tolerance instead.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub initial_step: f64,
    /// Optional elementwise L1 penalty weight; zero disables the proximal
    /// shrinkage step entirely.
    pub l1_weight: f64,
    pub mu0: f64,
    pub beta: f64,
    pub mu_max: f64,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            grad_tol: 1e-5,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            initial_step: 1.0,
            l1_weight: 0.0,
            mu0: 1e-2,
            beta: 1.1,
            mu_max: 20.0,
            primal_tol: 1e-6,
            dual_tol: 1e-6,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig(msg.into()))
            }
        };
        check(self.grad_tol > 0.0, "grad_tol must be positive")?;
        check(
            self.armijo_c > 0.0 && self.armijo_c < 1.0,
            "armijo_c must lie in (0, 1)",
        )?;
        check(
            self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0,
            "backtrack_factor must lie in (0, 1)",
        )?;
        check(self.initial_step > 0.0, "initial_step must be positive")?;
        check(self.l1_weight >= 0.0, "l1_weight must be nonnegative")?;
        check(self.mu0 > 0.0, "mu0 must be positive")?;
        check(self.beta >= 1.0, "beta must be at least 1")?;
        check(self.mu_max >= self.mu0, "mu_max must be at least mu0")?;
        check(self.primal_tol > 0.0, "primal_tol must be positive")?;
        check(self.dual_tol > 0.0, "dual_tol must be positive")?;
        Ok(())
    }
}

/// One row of a fit trace. Fields that do not apply to a solver stay `None`
/// (the gradient-descent solver has no residuals or penalty).
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Objective value; with an active L1 penalty this is the penalized merit.
    pub objective: f64,
    pub grad_norm: Option<f64>,
    pub primal_residual: Option<f64>,
    pub dual_residual: Option<f64>,
    pub mu: Option<f64>,
    pub elapsed_ms: f64,
}

/// Final parameters plus the per-iteration convergence trace.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub params: ModelParams,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn final_objective(&self) -> f64 {
        self.trace.last().map(|r| r.objective).unwrap_or(f64::NAN)
    }
}

/// Elementwise shrinkage `sign(a)·max(|a|-t, 0)`; diagonal entries pass
/// through unchanged when `skip_diagonal` is set.
pub fn soft_threshold(matrix: &DMatrix<f64>, t: f64, skip_diagonal: bool) -> DMatrix<f64> {
    let mut out = matrix.clone();
    for j in 0..out.ncols() {
        for i in 0..out.nrows() {
            if skip_diagonal && i == j {
                continue;
            }
            let v = out[(i, j)];
            out[(i, j)] = v.signum() * (v.abs() - t).max(0.0);
        }
    }
    out
}

/// Sum of absolute values of Θ plus the off-diagonal of Λ, the sparsity
/// penalty paired with [`soft_threshold`].
pub(crate) fn l1_penalty(params: &ModelParams) -> f64 {
    let theta_l1: f64 = params.theta().iter().map(|v| v.abs()).sum();
    let mut lambda_l1 = 0.0;
    let lam = params.lambda();
    for j in 0..lam.ncols() {
        for i in 0..lam.nrows() {
            if i != j {
                lambda_l1 += lam[(i, j)].abs();
            }
        }
    }
    theta_l1 + lambda_l1
}

pub(crate) struct StepOutcome {
    pub step: f64,
    pub params: ModelParams,
    pub merit: f64,
}

/// Backtracking Armijo search along the joint negative-gradient direction.
///
/// Tries `initial_step * backtrack_factor^k` for `k = 0..=MAX_BACKTRACKS`
/// and accepts the first step whose candidate is feasible (the merit closure
/// returns `Some`) and satisfies
/// `merit(candidate) <= merit_current - armijo_c * step * (|g_Λ|² + |g_Θ|²)`.
pub(crate) fn armijo_backtrack(
    params: &ModelParams,
    grad_lambda: &DMatrix<f64>,
    grad_theta: &DMatrix<f64>,
    merit_current: f64,
    merit: impl Fn(&ModelParams) -> Option<f64>,
    config: &SolverConfig,
) -> Result<StepOutcome> {
    let gsq = grad_lambda.norm_squared() + grad_theta.norm_squared();
    let mut step = config.initial_step;
    for _ in 0..=MAX_BACKTRACKS {
        let candidate = ModelParams::new_unchecked(
            params.lambda() - grad_lambda * step,
            params.theta() - grad_theta * step,
        );
        if let Some(m) = merit(&candidate) {
            if m <= merit_current - config.armijo_c * step * gsq {
                return Ok(StepOutcome {
                    step,
                    params: candidate,
                    merit: m,
                });
            }
        }
        step *= config.backtrack_factor;
    }
    Err(Error::LineSearchStalled(MAX_BACKTRACKS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_zero_is_identity() {
        let m = DMatrix::from_row_slice(2, 2, &[1.2, -0.3, 0.0, 5.0]);
        assert_eq!(soft_threshold(&m, 0.0, false), m);
    }

    #[test]
    fn soft_threshold_shrinks_entries() {
        let m = DMatrix::from_row_slice(1, 2, &[1.2, -0.3]);
        let s = soft_threshold(&m, 0.5, false);
        assert!((s[(0, 0)] - 0.7).abs() < 1e-15);
        assert_eq!(s[(0, 1)], 0.0);
    }

    #[test]
    fn soft_threshold_skip_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[5.0, 1.0, -1.0, 5.0]);
        let s = soft_threshold(&m, 10.0, true);
        assert_eq!(s[(0, 0)], 5.0);
        assert_eq!(s[(1, 1)], 5.0);
        assert_eq!(s[(0, 1)], 0.0);
        assert_eq!(s[(1, 0)], 0.0);
    }

    #[test]
    fn config_validation_catches_bad_ranges() {
        let bad = [
            SolverConfig {
                armijo_c: 1.5,
                ..SolverConfig::default()
            },
            SolverConfig {
                backtrack_factor: 0.0,
                ..SolverConfig::default()
            },
            SolverConfig {
                mu0: -1.0,
                ..SolverConfig::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
        assert!(SolverConfig::default().validate().is_ok());
    }
}
