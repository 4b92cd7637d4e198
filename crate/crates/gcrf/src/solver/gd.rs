//! Steepest-descent baseline: joint gradient steps on (Λ, Θ) with a
//! backtracking Armijo line search that also guards positive definiteness.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::model::{gradients, objective, objective_raw, ModelParams, SufficientStats};
use crate::solver::{
    armijo_backtrack, l1_penalty, soft_threshold, FitResult, SolverConfig, StepOutcome, TraceRecord,
};

/// Largest admissible Armijo step for the current gradients.
///
/// Returns the first `initial_step * backtrack_factor^k` (k from 0 up to 60)
/// for which the stepped Λ stays positive definite and
/// `f(stepped) <= f_current - armijo_c * step * (|g_Λ|² + |g_Θ|²)`.
pub fn line_search(
    stats: &SufficientStats,
    params: &ModelParams,
    grad_lambda: &DMatrix<f64>,
    grad_theta: &DMatrix<f64>,
    f_current: f64,
    config: &SolverConfig,
) -> Result<f64> {
    config.validate()?;
    let outcome = armijo_backtrack(
        params,
        grad_lambda,
        grad_theta,
        f_current,
        |cand| objective_raw(stats, cand.lambda(), cand.theta()).ok(),
        config,
    )?;
    Ok(outcome.step)
}

/// Applies the proximal shrinkage to Θ and to the off-diagonal of Λ.
///
/// The Λ shrink is skipped in the rare case where it would break positive
/// definiteness, so that every recorded iterate stays feasible.
pub(crate) fn prox_step(params: ModelParams, threshold: f64) -> ModelParams {
    let theta = soft_threshold(params.theta(), threshold, false);
    let lambda = soft_threshold(params.lambda(), threshold, true);
    if Cholesky::new(lambda.clone()).is_some() {
        ModelParams::new_unchecked(lambda, theta)
    } else {
        ModelParams::new_unchecked(params.lambda().clone(), theta)
    }
}

/// Minimizes the objective by steepest descent.
///
/// Iterates `Λ ← Λ - η·∇_Λ f`, `Θ ← Θ - η·∇_Θ f` with `η` from
/// [`line_search`]; converges when the joint gradient Frobenius norm drops
/// below `grad_tol * (1 + |f|)`. With `l1_weight > 0` every step is followed
/// by a proximal shrink and the traced objective includes the L1 penalty.
/// A stalled line search terminates the fit with `converged = false`.
pub fn fit_gd(
    stats: &SufficientStats,
    config: &SolverConfig,
    init: Option<ModelParams>,
) -> Result<FitResult> {
    config.validate()?;
    let mut params = match init {
        Some(p) => {
            stats.check_params(&p)?;
            p
        }
        None => ModelParams::identity_init(stats.input_dim(), stats.output_dim()),
    };
    let w = config.l1_weight;
    let mut f = objective(stats, &params)?;
    let mut merit = if w > 0.0 {
        f + w * l1_penalty(&params)
    } else {
        f
    };

    let start = Instant::now();
    let mut trace = vec![TraceRecord {
        iteration: 0,
        objective: merit,
        grad_norm: None,
        primal_residual: None,
        dual_residual: None,
        mu: None,
        elapsed_ms: 0.0,
    }];
    let mut converged = false;

    for iter in 1..=config.max_iter {
        let (gl, gt) = gradients(stats, &params)?;
        let gnorm = (gl.norm_squared() + gt.norm_squared()).sqrt();
        if let Some(last) = trace.last_mut() {
            last.grad_norm = Some(gnorm);
        }
        if gnorm <= config.grad_tol * (1.0 + merit.abs()) {
            converged = true;
            break;
        }
        let outcome = armijo_backtrack(
            &params,
            &gl,
            &gt,
            f,
            |cand| objective_raw(stats, cand.lambda(), cand.theta()).ok(),
            config,
        );
        let StepOutcome {
            step,
            params: stepped,
            merit: f_stepped,
        } = match outcome {
            Ok(o) => o,
            Err(Error::LineSearchStalled(_)) => break,
            Err(e) => return Err(e),
        };
        if w > 0.0 {
            params = prox_step(stepped, step * w);
            f = objective(stats, &params)?;
            merit = f + w * l1_penalty(&params);
        } else {
            params = stepped;
            f = f_stepped;
            merit = f;
        }
        trace.push(TraceRecord {
            iteration: iter,
            objective: merit,
            grad_norm: None,
            primal_residual: None,
            dual_residual: None,
            mu: None,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }

    // the loop may exhaust max_iter without examining the final iterate
    if !converged && trace.last().is_some_and(|r| r.grad_norm.is_none()) && config.max_iter > 0 {
        let (gl, gt) = gradients(stats, &params)?;
        let gnorm = (gl.norm_squared() + gt.norm_squared()).sqrt();
        if let Some(last) = trace.last_mut() {
            last.grad_norm = Some(gnorm);
        }
        if gnorm <= config.grad_tol * (1.0 + merit.abs()) {
            converged = true;
        }
    }

    let iterations = trace.len() - 1;
    Ok(FitResult {
        params,
        trace,
        converged,
        iterations,
    })
}
