//! Model parameters, sufficient statistics and the negative log-likelihood
//! objective with its analytic gradients.
//!
//! The model couples an input vector `x` (dimension `n`) to an output vector
//! `y` (dimension `p`) through a density proportional to
//! `exp(-y' Λ y - 2 x' Θ y)`, where `Λ` is a symmetric positive-definite
//! `p×p` matrix and `Θ` an `n×p` coupling matrix. Fitting minimizes
//!
//! ```text
//! f(Λ, Θ) = -log|Λ| + tr( S_yy Λ + 2 S_yx Θ + Λ⁻¹ Θ' S_xx Θ )
//! ```
//!
//! where the `S` matrices are the empirical second moments of the data.
//! All `Λ⁻¹` applications go through a Cholesky factorization; no inverse is
//! formed from the raw matrix.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Maximum absolute asymmetry tolerated when validating symmetric inputs.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in (j + 1)..m.nrows() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

fn check_square_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

/// The pair (Λ, Θ): output precision-like matrix and input→output coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    lambda: DMatrix<f64>,
    theta: DMatrix<f64>,
}

impl ModelParams {
    /// Validates symmetry and positive definiteness of `lambda` and the
    /// shape of `theta` (`n×p` against a `p×p` `lambda`).
    pub fn new(lambda: DMatrix<f64>, theta: DMatrix<f64>) -> Result<Self> {
        check_finite(&lambda, "lambda")?;
        check_finite(&theta, "theta")?;
        check_square_symmetric(&lambda, "lambda")?;
        if theta.ncols() != lambda.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "theta is {}x{} but lambda is {}x{}; theta must have {} columns",
                theta.nrows(),
                theta.ncols(),
                lambda.nrows(),
                lambda.ncols(),
                lambda.nrows()
            )));
        }
        if Cholesky::new(lambda.clone()).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { lambda, theta })
    }

    /// Skips validation; for internal iterates that preserve the invariants
    /// by construction.
    pub(crate) fn new_unchecked(lambda: DMatrix<f64>, theta: DMatrix<f64>) -> Self {
        Self { lambda, theta }
    }

    /// Λ = I, Θ = 0: the default solver starting point.
    pub fn identity_init(n: usize, p: usize) -> Self {
        Self {
            lambda: DMatrix::identity(p, p),
            theta: DMatrix::zeros(n, p),
        }
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    /// Input dimension `n`.
    pub fn input_dim(&self) -> usize {
        self.theta.nrows()
    }

    /// Output dimension `p`.
    pub fn output_dim(&self) -> usize {
        self.lambda.nrows()
    }
}

/// Raw paired samples: `x` is `m×n`, `y` is `m×p`, rows are samples.
#[derive(Clone, Debug)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "x has {} rows but y has {} rows",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::Degenerate("dataset has no samples".into()));
        }
        check_finite(&x, "x")?;
        check_finite(&y, "y")?;
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// Number of samples `m`.
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    /// Copy with column means subtracted from both `x` and `y`.
    pub fn centered(&self) -> Dataset {
        let center = |m: &DMatrix<f64>| {
            let means = m.row_mean();
            let mut out = m.clone();
            for mut row in out.row_iter_mut() {
                row -= &means;
            }
            out
        };
        Dataset {
            x: center(&self.x),
            y: center(&self.y),
        }
    }
}

/// Empirical second moments `S_yy = Y'Y/m`, `S_yx = Y'X/m`, `S_xx = X'X/m`
/// plus the sample count.
#[derive(Clone, Debug)]
pub struct SufficientStats {
    s_yy: DMatrix<f64>,
    s_yx: DMatrix<f64>,
    s_xx: DMatrix<f64>,
    m: usize,
}

impl SufficientStats {
    pub fn from_matrices(
        s_yy: DMatrix<f64>,
        s_yx: DMatrix<f64>,
        s_xx: DMatrix<f64>,
        m: usize,
    ) -> Result<Self> {
        check_finite(&s_yy, "s_yy")?;
        check_finite(&s_yx, "s_yx")?;
        check_finite(&s_xx, "s_xx")?;
        check_square_symmetric(&s_yy, "s_yy")?;
        check_square_symmetric(&s_xx, "s_xx")?;
        let (p, n) = (s_yy.nrows(), s_xx.nrows());
        if s_yx.nrows() != p || s_yx.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "s_yx is {}x{}, expected {}x{}",
                s_yx.nrows(),
                s_yx.ncols(),
                p,
                n
            )));
        }
        if m == 0 {
            return Err(Error::Degenerate("sample count must be positive".into()));
        }
        check_psd(&s_yy, "s_yy")?;
        check_psd(&s_xx, "s_xx")?;
        Ok(Self {
            s_yy,
            s_yx,
            s_xx,
            m,
        })
    }

    pub fn s_yy(&self) -> &DMatrix<f64> {
        &self.s_yy
    }

    pub fn s_yx(&self) -> &DMatrix<f64> {
        &self.s_yx
    }

    pub fn s_xx(&self) -> &DMatrix<f64> {
        &self.s_xx
    }

    pub fn sample_count(&self) -> usize {
        self.m
    }

    pub fn input_dim(&self) -> usize {
        self.s_xx.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.s_yy.nrows()
    }

    pub(crate) fn check_params(&self, params: &ModelParams) -> Result<()> {
        if params.input_dim() != self.input_dim() || params.output_dim() != self.output_dim() {
            return Err(Error::DimensionMismatch(format!(
                "params are n={}, p={} but stats are n={}, p={}",
                params.input_dim(),
                params.output_dim(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        Ok(())
    }
}

/// Positive semidefiniteness up to a scale-aware rounding floor.
fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let eigs = m.clone().symmetric_eigenvalues();
    let scale = eigs.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
    if eigs.iter().any(|&v| v < -SYMMETRY_TOL * scale) {
        return Err(Error::Degenerate(format!(
            "{what} has a negative eigenvalue ({:.3e})",
            eigs.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    Ok(())
}

/// Empirical covariances of a dataset, without mean-centering.
pub fn compute_stats(data: &Dataset) -> Result<SufficientStats> {
    let m = data.len() as f64;
    let s_yy = data.y().tr_mul(data.y()) / m;
    let s_yx = data.y().tr_mul(data.x()) / m;
    let s_xx = data.x().tr_mul(data.x()) / m;
    SufficientStats::from_matrices(s_yy, s_yx, s_xx, data.len())
}

/// Log-determinant of a symmetric positive-definite matrix via Cholesky.
/// Fails cleanly instead of returning NaN for non-PD input.
pub fn log_det_pd(matrix: &DMatrix<f64>) -> Result<f64> {
    check_square_symmetric(matrix, "matrix")?;
    let chol = Cholesky::new(matrix.clone()).ok_or(Error::NotPositiveDefinite)?;
    Ok(log_det_from_chol(&chol))
}

fn log_det_from_chol(chol: &Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        acc += l[(i, i)].ln();
    }
    2.0 * acc
}

/// Objective evaluated on raw matrices. `None`-style failure is an error:
/// a non-PD Λ signals an infeasible point and callers treat it as +∞.
pub(crate) fn objective_raw(
    stats: &SufficientStats,
    lambda: &DMatrix<f64>,
    theta: &DMatrix<f64>,
) -> Result<f64> {
    let chol = Cholesky::new(lambda.clone()).ok_or(Error::NotPositiveDefinite)?;
    let log_det = log_det_from_chol(&chol);
    // tr(S_yy Λ): entrywise product works because both are symmetric.
    let t_yy = stats.s_yy.dot(lambda);
    // 2 tr(S_yx Θ)
    let t_yx = 2.0 * stats.s_yx.dot(&theta.transpose());
    // tr(Λ⁻¹ Θ' S_xx Θ) via a factorized solve
    let coupling = theta.tr_mul(&(&stats.s_xx * theta));
    let t_xx = chol.solve(&coupling).trace();
    let f = -log_det + t_yy + t_yx + t_xx;
    if !f.is_finite() {
        return Err(Error::NonFinite("objective".into()));
    }
    Ok(f)
}

/// Negative log-likelihood `f(Λ, Θ)` at the given parameters.
pub fn objective(stats: &SufficientStats, params: &ModelParams) -> Result<f64> {
    stats.check_params(params)?;
    objective_raw(stats, params.lambda(), params.theta())
}

/// Analytic gradients of [`objective`]:
///
/// ```text
/// ∂f/∂Λ = -Λ⁻¹ + S_yy - Λ⁻¹ Θ' S_xx Θ Λ⁻¹      (returned exactly symmetric)
/// ∂f/∂Θ = 2 S_yx' + 2 S_xx Θ Λ⁻¹
/// ```
pub fn gradients(
    stats: &SufficientStats,
    params: &ModelParams,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    stats.check_params(params)?;
    let chol = Cholesky::new(params.lambda().clone()).ok_or(Error::NotPositiveDefinite)?;
    let inv = chol.inverse();
    let coupling = params.theta().tr_mul(&(&stats.s_xx * params.theta()));
    // Λ⁻¹ M Λ⁻¹ as two solves
    let half = chol.solve(&coupling);
    let pinch = chol.solve(&half.transpose());
    let grad_lambda = symmetrize(&(&stats.s_yy - &inv - pinch));
    let sxx_theta = &stats.s_xx * params.theta();
    let grad_theta =
        2.0 * stats.s_yx.transpose() + 2.0 * chol.solve(&sxx_theta.transpose()).transpose();
    Ok((grad_lambda, grad_theta))
}

/// Conditional mean `ŷ = -Λ⁻¹ Θ' x`.
pub fn predict(params: &ModelParams, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != params.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input has length {}, model expects {}",
            x.len(),
            params.input_dim()
        )));
    }
    let chol = Cholesky::new(params.lambda().clone()).ok_or(Error::NotPositiveDefinite)?;
    Ok(-chol.solve(&(params.theta().transpose() * x)))
}

/// Stationary point of the objective in closed form:
///
/// ```text
/// Λ* = ( S_yy - S_yx (S_xx + ridge·I)⁻¹ S_yx' )⁻¹
/// Θ* = -(S_xx + ridge·I)⁻¹ S_yx' Λ*
/// ```
///
/// Both gradients vanish at `(Λ*, Θ*)` when `ridge = 0`. Used as the test
/// oracle for the iterative solvers.
pub fn closed_form_mle(stats: &SufficientStats, ridge: f64) -> Result<ModelParams> {
    if ridge < 0.0 {
        return Err(Error::InvalidConfig("ridge must be nonnegative".into()));
    }
    let n = stats.input_dim();
    let sxx_r = stats.s_xx() + DMatrix::identity(n, n) * ridge;
    let chol_x = Cholesky::new(sxx_r)
        .ok_or_else(|| Error::Degenerate("s_xx + ridge*I is not positive definite".into()))?;
    // B = (S_xx + ridge I)⁻¹ S_yx'   (n×p)
    let b = chol_x.solve(&stats.s_yx().transpose());
    let schur = symmetrize(&(stats.s_yy() - stats.s_yx() * &b));
    let chol_s = Cholesky::new(schur)
        .ok_or_else(|| Error::Degenerate("Schur complement is not positive definite".into()))?;
    let lambda = symmetrize(&chol_s.inverse());
    let theta = -b * &lambda;
    ModelParams::new(lambda, theta)
}

/// Scale-aware default ridge: zero when `s_xx` factors, otherwise
/// `1e-8 · tr(s_xx)/n`.
pub fn default_ridge(stats: &SufficientStats) -> f64 {
    if Cholesky::new(stats.s_xx().clone()).is_some() {
        0.0
    } else {
        1e-8 * stats.s_xx().trace() / stats.input_dim() as f64
    }
}
