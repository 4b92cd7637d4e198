//! Alternating-direction solver on the split formulation
//!
//! ```text
//! min  -log|Λ| + tr( S_yy Λ + 2 S_yx Θ + S_xx Φ )   s.t.  Φ = Θ Λ⁻¹ Θ'
//! ```
//!
//! The coupled trace term of the plain objective becomes linear in the
//! auxiliary `n×n` matrix Φ; the constraint is enforced through a symmetric
//! matrix multiplier Q and a quadratic penalty with factor μ:
//!
//! ```text
//! L(Λ, Θ, Φ, Q) = -log|Λ| + tr(S_yy Λ + 2 S_yx Θ + S_xx Φ)
//!                 + <Q, R> + (μ/2)|R|²,   R = Φ - Θ Λ⁻¹ Θ'
//! ```
//!
//! Each outer iteration takes one safeguarded joint gradient step on
//! (Λ, Θ), minimizes L over Φ in closed form, updates the multiplier from
//! the residual and grows μ geometrically up to a cap.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::model::{objective, symmetrize, ModelParams, SufficientStats};
use crate::solver::gd::prox_step;
use crate::solver::{armijo_backtrack, l1_penalty, FitResult, SolverConfig, TraceRecord};

/// Current primal variables, split matrix, multiplier and penalty.
#[derive(Clone, Debug)]
pub struct AdmmState {
    pub params: ModelParams,
    /// The split variable Φ, an `n×n` symmetric matrix.
    pub phi: DMatrix<f64>,
    /// The multiplier Q paired with the constraint residual, `n×n` symmetric.
    pub dual: DMatrix<f64>,
    pub mu: f64,
    pub iteration: usize,
}

impl AdmmState {
    /// Feasible starting state: Φ matches the constraint at `params`,
    /// the multiplier is zero and the penalty starts at `mu0`.
    pub fn init(params: ModelParams, config: &SolverConfig) -> Result<Self> {
        let phi = constraint_value(&params)?;
        let n = params.input_dim();
        Ok(Self {
            params,
            phi,
            dual: DMatrix::zeros(n, n),
            mu: config.mu0,
            iteration: 0,
        })
    }
}

/// The constraint right-hand side `Θ Λ⁻¹ Θ'`, returned exactly symmetric.
fn constraint_value(params: &ModelParams) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(params.lambda().clone()).ok_or(Error::NotPositiveDefinite)?;
    Ok(symmetrize(
        &(params.theta() * chol.solve(&params.theta().transpose())),
    ))
}

/// Constraint residual `R = Φ - Θ Λ⁻¹ Θ'`; zero exactly when the split holds.
pub fn residual(params: &ModelParams, phi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(phi - constraint_value(params)?)
}

fn lagrangian_raw(
    stats: &SufficientStats,
    lambda: &DMatrix<f64>,
    theta: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    dual: &DMatrix<f64>,
    mu: f64,
) -> Result<f64> {
    let chol = Cholesky::new(lambda.clone()).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    let mut log_det = 0.0;
    for i in 0..l.nrows() {
        log_det += l[(i, i)].ln();
    }
    log_det *= 2.0;
    let r = phi - symmetrize(&(theta * chol.solve(&theta.transpose())));
    let value = -log_det
        + stats.s_yy().dot(lambda)
        + 2.0 * stats.s_yx().dot(&theta.transpose())
        + stats.s_xx().dot(phi)
        + dual.dot(&r)
        + 0.5 * mu * r.norm_squared();
    if !value.is_finite() {
        return Err(Error::NonFinite("lagrangian".into()));
    }
    Ok(value)
}

/// Augmented Lagrangian value at the current state. Equals the plain
/// objective whenever the residual vanishes.
pub fn lagrangian(stats: &SufficientStats, state: &AdmmState) -> Result<f64> {
    stats.check_params(&state.params)?;
    lagrangian_raw(
        stats,
        state.params.lambda(),
        state.params.theta(),
        &state.phi,
        &state.dual,
        state.mu,
    )
}

/// Gradients of the augmented Lagrangian in (Λ, Θ) with Φ and Q held fixed:
///
/// ```text
/// ∂L/∂Λ = -Λ⁻¹ + S_yy + Λ⁻¹ Θ' G Θ Λ⁻¹
/// ∂L/∂Θ = 2 S_yx' - 2 G Θ Λ⁻¹            with  G = Q + μR
/// ```
pub fn lagrangian_gradients(
    stats: &SufficientStats,
    params: &ModelParams,
    phi: &DMatrix<f64>,
    dual: &DMatrix<f64>,
    mu: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let chol = Cholesky::new(params.lambda().clone()).ok_or(Error::NotPositiveDefinite)?;
    let w = symmetrize(&(params.theta() * chol.solve(&params.theta().transpose())));
    let g = dual + (phi - w) * mu;
    let inv = chol.inverse();
    let pinched = params.theta().tr_mul(&(&g * params.theta()));
    let half = chol.solve(&pinched);
    let grad_lambda = symmetrize(&(stats.s_yy() - &inv + chol.solve(&half.transpose())));
    let g_theta = &g * params.theta();
    let grad_theta =
        2.0 * stats.s_yx().transpose() - 2.0 * chol.solve(&g_theta.transpose()).transpose();
    Ok((grad_lambda, grad_theta))
}

/// Exact minimizer of the Lagrangian over Φ:
/// `Φ⁺ = Θ Λ⁻¹ Θ' - (S_xx + Q)/μ`.
pub fn phi_step(stats: &SufficientStats, state: &AdmmState) -> Result<DMatrix<f64>> {
    let w = constraint_value(&state.params)?;
    Ok(symmetrize(&(w - (stats.s_xx() + &state.dual) / state.mu)))
}

/// One safeguarded joint gradient step on (Λ, Θ) with the Lagrangian as the
/// line-search merit; Φ, Q and μ stay fixed.
pub fn lambda_theta_step(
    stats: &SufficientStats,
    state: &AdmmState,
    config: &SolverConfig,
) -> Result<ModelParams> {
    let (params, _step) = lambda_theta_step_inner(stats, state, config)?;
    Ok(params)
}

fn lambda_theta_step_inner(
    stats: &SufficientStats,
    state: &AdmmState,
    config: &SolverConfig,
) -> Result<(ModelParams, f64)> {
    let merit_current = lagrangian(stats, state)?;
    let (gl, gt) = lagrangian_gradients(stats, &state.params, &state.phi, &state.dual, state.mu)?;
    let outcome = armijo_backtrack(
        &state.params,
        &gl,
        &gt,
        merit_current,
        |cand| {
            lagrangian_raw(
                stats,
                cand.lambda(),
                cand.theta(),
                &state.phi,
                &state.dual,
                state.mu,
            )
            .ok()
        },
        config,
    )?;
    Ok((outcome.params, outcome.step))
}

/// Residual-based multiplier update `Q⁺ = Q + μ·R`; Q is unchanged at a
/// feasible point.
pub fn dual_update(state: &AdmmState) -> Result<DMatrix<f64>> {
    let r = residual(&state.params, &state.phi)?;
    Ok(symmetrize(&(&state.dual + r * state.mu)))
}

/// Geometric penalty growth `μ⁺ = min(μ_max, β·μ)`.
pub fn penalty_update(mu: f64, config: &SolverConfig) -> f64 {
    (config.beta * mu).min(config.mu_max)
}

/// Runs the alternating-direction loop
/// `[gradient step on (Λ,Θ)] → [Φ minimization] → [dual update] → [penalty update]`
/// until the primal residual, the penalty-scaled Φ change and the relative
/// objective change all fall below their tolerances, or `max_iter` is hit.
///
/// Each trace record carries the plain objective at the current parameters,
/// the Lagrangian gradient norm, both residuals and the penalty value after
/// that iteration's update. With `l1_weight > 0` the gradient step is
/// followed by the same proximal shrink as the steepest-descent solver.
pub fn fit_admm(
    stats: &SufficientStats,
    config: &SolverConfig,
    init: Option<ModelParams>,
) -> Result<FitResult> {
    config.validate()?;
    let params = match init {
        Some(p) => {
            stats.check_params(&p)?;
            p
        }
        None => ModelParams::identity_init(stats.input_dim(), stats.output_dim()),
    };
    let w = config.l1_weight;
    let f0 = objective(stats, &params)?;
    let mut merit = if w > 0.0 {
        f0 + w * l1_penalty(&params)
    } else {
        f0
    };
    let mut state = AdmmState::init(params, config)?;

    let start = Instant::now();
    let r0 = residual(&state.params, &state.phi)?;
    let mut trace = vec![TraceRecord {
        iteration: 0,
        objective: merit,
        grad_norm: None,
        primal_residual: Some(r0.norm()),
        dual_residual: Some(0.0),
        mu: Some(state.mu),
        elapsed_ms: 0.0,
    }];
    let mut converged = false;

    for iter in 1..=config.max_iter {
        state.iteration = iter;
        let (gl, gt) =
            lagrangian_gradients(stats, &state.params, &state.phi, &state.dual, state.mu)?;
        if let Some(last) = trace.last_mut() {
            last.grad_norm = Some((gl.norm_squared() + gt.norm_squared()).sqrt());
        }

        let stepped = match lambda_theta_step_inner(stats, &state, config) {
            Ok((p, step)) => {
                if w > 0.0 {
                    prox_step(p, step * w)
                } else {
                    p
                }
            }
            Err(Error::LineSearchStalled(_)) => break,
            Err(e) => return Err(e),
        };
        state.params = stepped;

        let phi_prev = state.phi.clone();
        state.phi = phi_step(stats, &state)?;
        state.dual = dual_update(&state)?;

        let r = residual(&state.params, &state.phi)?;
        let primal = r.norm();
        let dual_res = state.mu * (&state.phi - phi_prev).norm();

        let f = objective(stats, &state.params)?;
        let new_merit = if w > 0.0 {
            f + w * l1_penalty(&state.params)
        } else {
            f
        };
        let rel_change = (new_merit - merit).abs() / (1.0 + new_merit.abs());
        merit = new_merit;

        state.mu = penalty_update(state.mu, config);
        trace.push(TraceRecord {
            iteration: iter,
            objective: merit,
            grad_norm: None,
            primal_residual: Some(primal),
            dual_residual: Some(dual_res),
            mu: Some(state.mu),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });

        if primal <= config.primal_tol
            && dual_res <= config.dual_tol
            && rel_change <= config.grad_tol
        {
            converged = true;
            break;
        }
    }

    if trace.last().is_some_and(|r| r.grad_norm.is_none()) {
        let (gl, gt) =
            lagrangian_gradients(stats, &state.params, &state.phi, &state.dual, state.mu)?;
        if let Some(last) = trace.last_mut() {
            last.grad_norm = Some((gl.norm_squared() + gt.norm_squared()).sqrt());
        }
    }

    let iterations = trace.len() - 1;
    Ok(FitResult {
        params: state.params,
        trace,
        converged,
        iterations,
    })
}
