//! Fit the alternating-direction solver on synthetic data and report how
//! well the generator's parameters are recovered.

use gcrf::datagen::{recovery_error, sample_dataset, sample_ground_truth};
use gcrf::{compute_stats, fit_admm, SolverConfig};

fn main() {
    let gt = sample_ground_truth(6, 4, 1.0, 0.5, 42).expect("valid dims");
    println!(
        "ground truth: n={}, p={}, theta nonzeros {}",
        gt.params.input_dim(),
        gt.params.output_dim(),
        gt.params.theta().iter().filter(|v| **v != 0.0).count()
    );

    for m in [500usize, 5_000, 50_000] {
        let data = sample_dataset(&gt, m, 7).expect("sampling");
        let stats = compute_stats(&data).expect("stats");
        let fit = fit_admm(&stats, &SolverConfig::default(), None).expect("fit");
        // the sampler's noise convention makes the likelihood estimate
        // (2Λ, 2Θ); compare against that pair
        let report = recovery_error(&gt.mle_target(), &fit.params).expect("dims match");
        println!(
            "m = {m:>6}: {} iterations, converged = {}, rel err lambda {:.4}, theta {:.4}",
            fit.iterations, fit.converged, report.rel_frobenius_lambda, report.rel_frobenius_theta
        );
    }
}
