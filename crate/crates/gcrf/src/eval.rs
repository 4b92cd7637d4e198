//! Evaluation metrics and solver comparison: area under the ROC curve and
//! iterations-to-tolerance on matched convergence traces.

use crate::datagen::{sample_dataset, sample_ground_truth};
use crate::error::{Error, Result};
use crate::model::{closed_form_mle, compute_stats, default_ridge, objective, SufficientStats};
use crate::solver::admm::fit_admm;
use crate::solver::gd::fit_gd;
use crate::solver::{SolverConfig, TraceRecord};

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
///
/// Computed through average ranks in `O(m log m)`; the result is exactly the
/// pairwise count, since ranks and their sums are half-integers that f64
/// represents without rounding.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let pos = labels.iter().filter(|l| **l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // average rank over each tied block, 1-based
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// Smallest trace index whose objective is within `eps` of `f_star`;
/// `None` if the trace never gets there.
pub fn iterations_to_tolerance(trace: &[TraceRecord], f_star: f64, eps: f64) -> Option<usize> {
    trace
        .iter()
        .find(|rec| rec.objective <= f_star + eps)
        .map(|rec| rec.iteration)
}

/// Tolerance used when counting iterations in [`compare_solvers`].
pub const COMPARE_EPS: f64 = 1e-6;

/// Frobenius agreement threshold between the two solvers' final parameters.
pub const AGREE_TOL: f64 = 1e-4;

/// Paired-run summary: iteration counts to reach `f* + 1e-6`, the
/// closed-form optimum value and whether the final parameters agree.
#[derive(Clone, Copy, Debug)]
pub struct SolverComparison {
    pub gd_iters: Option<usize>,
    pub admm_iters: Option<usize>,
    pub f_star: f64,
    pub agree: bool,
}

/// Runs both solvers from the default init on the same statistics and
/// compares their traces against the closed-form optimum.
pub fn compare_solvers(stats: &SufficientStats, config: &SolverConfig) -> Result<SolverComparison> {
    let oracle = closed_form_mle(stats, default_ridge(stats))?;
    let f_star = objective(stats, &oracle)?;

    let mut cfg = config.clone();
    cfg.l1_weight = 0.0;
    let gd = fit_gd(stats, &cfg, None)?;
    let admm = fit_admm(stats, &cfg, None)?;

    let agree = (gd.params.lambda() - admm.params.lambda()).norm() <= AGREE_TOL
        && (gd.params.theta() - admm.params.theta()).norm() <= AGREE_TOL;

    Ok(SolverComparison {
        gd_iters: iterations_to_tolerance(&gd.trace, f_star, COMPARE_EPS),
        admm_iters: iterations_to_tolerance(&admm.trace, f_star, COMPARE_EPS),
        f_star,
        agree,
    })
}

/// One instance of the standardized comparison suite.
#[derive(Clone, Copy, Debug)]
pub struct SuiteCell {
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub m: usize,
}

/// The standardized synthetic suite: seeds 1..=count at n=5, p=3, m=1000.
pub fn standard_suite(count: usize) -> Vec<SuiteCell> {
    (1..=count as u64)
        .map(|seed| SuiteCell {
            seed,
            n: 5,
            p: 3,
            m: 1000,
        })
        .collect()
}

/// Statistics for a suite cell: ground truth with diagonal dominance 1.0 and
/// Θ density 0.5, sampled with the cell's seed.
pub fn suite_stats(cell: &SuiteCell) -> Result<SufficientStats> {
    let gt = sample_ground_truth(cell.n, cell.p, 1.0, 0.5, cell.seed)?;
    let data = sample_dataset(&gt, cell.m, cell.seed.wrapping_add(1000))?;
    compute_stats(&data)
}
