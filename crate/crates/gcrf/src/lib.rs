//! Training and inference for Gaussian conditional random fields.
//!
//! The crate fits the coupled precision model `p(y|x) ∝ exp(-y'Λy - 2x'Θy)`
//! by minimizing its negative log-likelihood, with two solvers:
//!
//! * [`solver::fit_gd`] — steepest descent with a backtracking,
//!   positive-definiteness-safeguarded line search;
//! * [`solver::fit_admm`] — an alternating-direction scheme that splits the
//!   coupled trace term through an auxiliary matrix `Φ = ΘΛ⁻¹Θ'`, with a
//!   closed-form Φ update, a safeguarded joint gradient step for `(Λ, Θ)`, a
//!   residual-based dual update and a geometric penalty schedule.
//!
//! Supporting modules cover synthetic ground-truth generation and sampling
//! ([`datagen`]), landmark-sequence ingestion and similarity registration
//! ([`landmarks`]), ROC/AUC and convergence comparison ([`eval`]), and file
//! formats plus the command-line front end ([`io`], [`cli`]).
//!
//! See the crate `examples/` directory for one runnable program per major
//! capability.

pub mod cli;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod io;
pub mod landmarks;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    closed_form_mle, compute_stats, default_ridge, gradients, log_det_pd, objective, predict,
    Dataset, ModelParams, SufficientStats,
};
pub use solver::{
    admm::{fit_admm, AdmmState},
    gd::fit_gd,
    soft_threshold, FitResult, SolverConfig, TraceRecord,
};
